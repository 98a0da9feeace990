#ifndef HFY_STRUCTURED_HPP
#define HFY_STRUCTURED_HPP

#include <Eigen/Core>
#include <stdexcept>
#include <vector>

#include "hfy/errors.hpp"

// Factor-graph structures over binary pattern indicators, exact MAP
// oracles, and the SparseMAP transformation computed with an active
// set algorithm.

namespace hfy {

enum class GraphKind { KSubsets, SeqKSubsets };

/// Budgeted selection of k of n binary variables. SeqKSubsets adds one
/// pairwise factor per consecutive index pair; `edges[i]` scores the
/// configuration where variables i and i+1 are both selected (all other
/// factor configurations score zero).
struct FactorGraph {
    GraphKind kind = GraphKind::KSubsets;
    Eigen::Index n_vars = 0;
    Eigen::Index k = 1;
    Eigen::VectorXd unary;  // base scores, length n_vars
    Eigen::VectorXd edges;  // length n_vars - 1 for SeqKSubsets, else empty

    static FactorGraph ksubsets(Eigen::Index n, Eigen::Index k);
    static FactorGraph seq_ksubsets(Eigen::Index n, Eigen::Index k,
                                    Eigen::VectorXd edge_scores);

    Eigen::Index n_edges() const { return edges.size(); }
    /// Squared norm of any vertex in the full bit encoding: k for plain
    /// subsets, 2 n_vars - 1 when variables and pairwise factors are
    /// one-hot encoded.
    double vertex_norm_sq() const;
    void validate() const;
};

/// One vertex of the structured polytope: the value-1 indicator over
/// variables (factor configurations follow from consecutive bit pairs).
struct Structure {
    Eigen::VectorXi bits;  // 0/1, sums to k
    double score = 0.0;

    bool operator==(const Structure& o) const { return bits == o.bits; }
};

/// Point in the marginal polytope together with the convex combination
/// of vertices that certifies membership.
struct Marginals {
    Eigen::VectorXd mu_v;                 // variable marginals, in [0,1], sum k
    Eigen::VectorXd mu_f;                 // per-edge P(both selected); empty for KSubsets
    std::vector<Structure> vertices;      // active set decomposition
    Eigen::VectorXd weights;              // simplex weights over `vertices`
    std::vector<double> objective_trace;  // restricted objective per iteration
    int iterations = 0;

    bool is_vertex() const { return vertices.size() == 1; }
};

struct ActiveSetConfig {
    int max_iters = 100;
    double tol = 1e-9;
};

/// Highest-scoring structure under `adjusted_unary` plus the graph's
/// edge scores. Top-k selection for KSubsets; an O(n k) dynamic program
/// over (position, used, last bit) for SeqKSubsets. Ties resolve to the
/// lexicographically smallest index set.
Structure map_oracle(const FactorGraph& g,
                     const Eigen::Ref<const Eigen::VectorXd>& adjusted_unary);

/// Maximizer of beta * theta^T mu_v + edges^T mu_f - 1/2 ||mu_v||^2 over
/// the marginal polytope, via the active set method: alternate between a
/// MAP call on the current gradient and an exact KKT solve of the
/// restricted problem over the collected vertices. Throws
/// ConvergenceError when max_iters is exhausted.
Marginals sparsemap(const FactorGraph& g,
                    const Eigen::Ref<const Eigen::VectorXd>& theta,
                    double beta = 1.0, const ActiveSetConfig& cfg = {});

/// Fast path for KSubsets: Euclidean projection of beta * theta onto
/// {mu in [0,1]^n : sum mu = k} by sorted thresholding, plus a greedy
/// vertex decomposition of the result.
Marginals ksubsets_projection(const Eigen::Ref<const Eigen::VectorXd>& theta,
                              Eigen::Index k, double beta = 1.0);

/// True iff theta^T y >= max over structures y' of
/// theta^T y' + 1/2 ||y - y'||^2, with the squared distance counted in
/// the full bit encoding (a Hamming distance). When true, sparsemap
/// returns the vertex y exactly.
bool structured_margin_check(const FactorGraph& g,
                             const Eigen::Ref<const Eigen::VectorXd>& theta,
                             const Structure& y);

/// Fenchel-Young loss of the SparseMAP regularizer at target vertex y.
double structured_fy_loss(const FactorGraph& g,
                          const Eigen::Ref<const Eigen::VectorXd>& theta,
                          const Structure& y);

/// Factor indicator vector implied by variable bits (per edge, 1 when
/// both endpoints are selected). Empty for KSubsets graphs.
Eigen::VectorXd factor_indicators(const FactorGraph& g, const Eigen::VectorXi& bits);

}  // namespace hfy

#endif
