#ifndef HFY_EXPERIMENTS_HPP
#define HFY_EXPERIMENTS_HPP

#include <array>
#include <cstdint>
#include <ostream>
#include <string>
#include <vector>

#include "hfy/hopfield.hpp"

// Experiment drivers behind the CLI subcommands. The CLI only parses
// flags and writes the rows these functions return, so results through
// either path are identical.

namespace hfy {

/// Method selector as spelled on the command line:
/// softmax | entmax | normmax | sparsemax | ksubsets | seq-ksubsets,
/// optionally with an inline parameter ("entmax:1.5", "ksubsets:2").
struct MethodSpec {
    std::string name;
    double alpha = 1.5;          // entmax / normmax
    Eigen::Index k = 1;          // ksubsets / seq-ksubsets
    Eigen::VectorXd edge_scores; // seq-ksubsets; zero-filled when empty

    bool structured() const;
    std::string label() const;
    RetrievalMethod resolve(Eigen::Index n_patterns) const;
};

MethodSpec parse_method(const std::string& token, double alpha = 1.5,
                        Eigen::Index k = 1,
                        const Eigen::VectorXd& edge_scores = Eigen::VectorXd());

struct SweepRow {
    double beta;
    Eigen::Index coordinate;
    double value;
};

/// Regularization path of a transformation: one row per (beta,
/// coordinate) in the order given.
std::vector<SweepRow> run_transform_sweep(const MethodSpec& method,
                                          const Eigen::VectorXd& theta,
                                          const std::vector<double>& betas,
                                          const ActiveSetConfig& solver = {});

/// Same sweep for an explicit factor graph (e.g. loaded from JSON).
std::vector<SweepRow> run_transform_sweep(const FactorGraph& graph,
                                          const Eigen::VectorXd& theta,
                                          const std::vector<double>& betas,
                                          const ActiveSetConfig& solver = {});

struct GridSpec {
    double x0 = -1, x1 = 1, y0 = -1, y1 = 1;
    int resolution = 10;
};

struct BasinRow {
    double x, y;
    int label;  // retrieved pattern index, or -1 for metastable / non-exact
};

/// Attraction basins over a 2-D grid of initial queries. Sparse methods
/// label a cell only on bit-exact vertex retrieval; softmax uses an
/// eps-ball around the patterns. Rows scan x fastest, then y.
std::vector<BasinRow> run_basins(const Eigen::MatrixXd& patterns, const GridSpec& grid,
                                 const MethodSpec& method, double beta,
                                 double softmax_eps = 0.01);

struct MetastableRow {
    std::string method;
    double beta;
    int support;
    double percent;
};

/// Histogram of fixed-point support sizes over a query set. Support is
/// counted exactly for sparse and structured methods and thresholded at
/// 0.01 for softmax.
std::vector<MetastableRow> run_metastable(const Eigen::MatrixXd& patterns,
                                          const Eigen::MatrixXd& queries,
                                          const std::vector<MethodSpec>& methods,
                                          const std::vector<double>& betas);

struct CapacityRow {
    int dim;
    int count;
    double beta;
    double eps;
    double success_rate;  // meaningful only when status == "ok"
    std::string status;   // ok | infeasible | generation_error
};

/// One-step exact retrieval rate over a sweep. Rows whose parameters
/// violate the feasibility precondition M^2 > 2m/beta are marked
/// infeasible and skipped; pattern-placement failures are reported per
/// row rather than aborting the sweep.
std::vector<CapacityRow> run_capacity(const std::vector<int>& dims,
                                      const std::vector<int>& counts,
                                      const std::vector<double>& betas,
                                      const std::vector<double>& epss,
                                      const MethodSpec& method, std::uint64_t seed,
                                      int rounds = 1, double radius = 1.0);

/// Pattern generators: sphere_uniform, min_angle (pairwise >= pi/3), or
/// grid2d (a deterministic ring of 2-D patterns for basin plots).
Eigen::MatrixXd generate_patterns(const std::string& kind, int dim, int count,
                                  double radius, std::uint64_t seed);

void write_csv(std::ostream& out, const std::vector<SweepRow>& rows);
void write_csv(std::ostream& out, const std::vector<BasinRow>& rows);
void write_csv(std::ostream& out, const std::vector<MetastableRow>& rows);
void write_csv(std::ostream& out, const std::vector<CapacityRow>& rows);

}  // namespace hfy

#endif
