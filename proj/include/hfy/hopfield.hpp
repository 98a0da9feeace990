#ifndef HFY_HOPFIELD_HPP
#define HFY_HOPFIELD_HPP

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

#include "hfy/structured.hpp"
#include "hfy/transforms.hpp"

// Energy-based associative memory over continuous patterns: the energy
// couples a Fenchel-Young loss against the uniform mixture with a
// quadratic proximity term, and its concave-convex minimization yields
// the update q <- X^T yhat(beta X q).

namespace hfy {

/// Immutable memory: rows of `patterns` are the stored vectors, with the
/// empirical mean and the largest row norm cached at construction.
struct PatternSet {
    Eigen::MatrixXd patterns;  // N x D
    Eigen::VectorXd mean;      // column mean of rows, length D
    double max_norm = 0.0;

    explicit PatternSet(Eigen::MatrixXd X);

    Eigen::Index count() const { return patterns.rows(); }
    Eigen::Index dim() const { return patterns.cols(); }
};

using RetrievalMethod = std::variant<EntropyKind, FactorGraph>;
using AttentionWeights = std::variant<Distribution, Marginals>;
using RetrievedPattern = std::variant<Eigen::Index, Structure>;

struct RetrievalConfig {
    RetrievalMethod method = EntropyKind::softmax();
    double beta = 1.0;
    int max_steps = 200;
    double fix_tol = 1e-10;
    ActiveSetConfig active_set{};

    void validate() const;
};

struct RetrievalResult {
    Eigen::VectorXd q_final;
    std::vector<Eigen::VectorXd> trajectory;  // q0 .. qT
    AttentionWeights y_final;
    int steps = 0;  // first iterate index at which the fixed point was reached
    bool converged = false;
    // Set when the final transformation output is an exact vertex (one-hot
    // distribution or integral structure), so q_final is a stored pattern
    // or pattern association bit for bit.
    std::optional<RetrievedPattern> exact_pattern;
};

struct SeparationReport {
    Eigen::VectorXd delta;
    double margin_threshold = 0.0;
    Eigen::Array<bool, Eigen::Dynamic, 1> satisfied;
};

/// Energy of query q. Nonnegative for queries in the convex hull of the
/// patterns (pattern associations in the structured case) and bounded by
/// min(2 M^2, -Omega(1/N)/beta + M^2/2) for simplex methods.
double energy(const PatternSet& ps, const Eigen::Ref<const Eigen::VectorXd>& q,
              const RetrievalConfig& cfg);

/// One concave-convex step: q_next = X^T yhat(beta X q). Never increases
/// the energy.
std::pair<Eigen::VectorXd, AttentionWeights> update_step(
    const PatternSet& ps, const Eigen::Ref<const Eigen::VectorXd>& q,
    const RetrievalConfig& cfg);

/// Iterates update_step until the query moves by at most fix_tol or
/// max_steps is reached. Non-convergence is reported through the
/// `converged` flag, not an error.
RetrievalResult retrieve(const PatternSet& ps,
                         const Eigen::Ref<const Eigen::VectorXd>& q0,
                         const RetrievalConfig& cfg);

/// Separation of each pattern (or candidate structure) from the rest,
/// against the exact-retrieval threshold: m/beta for simplex methods
/// with a margin, k/beta for k-subsets, 6k/beta for sequential
/// k-subsets. Structured reports require an explicit candidate list.
SeparationReport separation_report(const PatternSet& ps, const RetrievalConfig& cfg,
                                   const std::vector<Structure>& candidates = {});

/// Stores n_patterns points on the sphere of radius `radius` with
/// pairwise angle at least pi/3 (rejection sampling; throws
/// GenerationError when the attempt budget runs out), perturbs each by a
/// random direction of norm eps `rounds` times, runs one update step and
/// returns the fraction retrieved exactly.
double capacity_trial(int dim, int n_patterns, double beta, double eps,
                      const EntropyKind& kind, std::uint64_t seed,
                      double radius = 1.0, int rounds = 1);

struct RandomCapacityResult {
    int n_patterns = 0;
    double eps_bound = 0.0;
    double success_rate = 0.0;
};

Eigen::MatrixXd sample_sphere_uniform(int dim, int n, double radius, std::uint64_t seed);

/// Rejection sampling on the sphere keeping pairwise angles >= pi/3;
/// throws GenerationError when the attempt budget runs out.
Eigen::MatrixXd sample_sphere_min_angle(int dim, int n, double radius,
                                        std::uint64_t seed);

/// Random-placement variant: patterns drawn uniformly on the sphere, the
/// pattern count derived from the failure probability p and growth base
/// zeta, the perturbation set to the corresponding feasibility bound.
/// Simulation only; the rate is reported, not guaranteed.
RandomCapacityResult capacity_trial_random(int dim, double beta, double zeta, double p,
                                           const EntropyKind& kind, std::uint64_t seed,
                                           double radius = 1.0, int rounds = 1);

}  // namespace hfy

#endif
