#include "hfy/structured.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <utility>

namespace hfy {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_unary(const FactorGraph& g, const Eigen::Ref<const Eigen::VectorXd>& u) {
    if (u.size() != g.n_vars)
        throw std::invalid_argument("unary score vector does not match graph size");
    if (!u.allFinite())
        throw std::invalid_argument("unary scores must be finite");
}

Structure topk_select(const Eigen::Ref<const Eigen::VectorXd>& scores, Eigen::Index k) {
    const Eigen::Index n = scores.size();
    std::vector<Eigen::Index> order(static_cast<size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        if (scores[a] != scores[b]) return scores[a] > scores[b];
        return a < b;  // ties: lexicographically smallest index set
    });
    Structure s;
    s.bits = Eigen::VectorXi::Zero(n);
    s.score = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) {
        s.bits[order[static_cast<size_t>(j)]] = 1;
        s.score += scores[order[static_cast<size_t>(j)]];
    }
    return s;
}

// Exact argmax over {bits in {0,1}^n : sum bits = k} of
//   sum_i unary(i, bits_i) + sum_e edge(e, bits_e, bits_{e+1}).
// Backward table over (position, ones used, previous bit); forward
// reconstruction prefers bit 1 at exact ties, which yields the
// lexicographically smallest index set.
template <class UnaryFn, class EdgeFn>
std::pair<double, Eigen::VectorXi> chain_budget_argmax(Eigen::Index n, Eigen::Index k,
                                                       UnaryFn unary, EdgeFn edge) {
    const Eigen::Index kc = k + 1;
    auto id = [&](Eigen::Index i, Eigen::Index c, int b) { return (i * kc + c) * 2 + b; };
    std::vector<double> val(static_cast<size_t>((n + 1) * kc * 2), kNegInf);
    for (int b = 0; b < 2; ++b) val[static_cast<size_t>(id(n, k, b))] = 0.0;

    for (Eigen::Index i = n - 1; i >= 0; --i) {
        for (Eigen::Index c = 0; c <= std::min(i, k); ++c) {
            for (int b = 0; b < 2; ++b) {
                double best = kNegInf;
                for (int bit = 0; bit <= 1; ++bit) {
                    if (bit == 1 && c == k) continue;
                    const double next = val[static_cast<size_t>(id(i + 1, c + bit, bit))];
                    if (next == kNegInf) continue;
                    double sc = unary(i, bit) + next;
                    if (i > 0) sc += edge(i - 1, b, bit);
                    if (sc > best) best = sc;
                }
                val[static_cast<size_t>(id(i, c, b))] = best;
            }
        }
    }

    Eigen::VectorXi bits = Eigen::VectorXi::Zero(n);
    Eigen::Index c = 0;
    int prev = 0;
    for (Eigen::Index i = 0; i < n; ++i) {
        double s1 = kNegInf;
        if (c < k) {
            const double next = val[static_cast<size_t>(id(i + 1, c + 1, 1))];
            if (next != kNegInf) {
                s1 = unary(i, 1) + next;
                if (i > 0) s1 += edge(i - 1, prev, 1);
            }
        }
        double s0 = kNegInf;
        {
            const double next = val[static_cast<size_t>(id(i + 1, c, 0))];
            if (next != kNegInf) {
                s0 = unary(i, 0) + next;
                if (i > 0) s0 += edge(i - 1, prev, 0);
            }
        }
        if (s1 >= s0) {
            bits[i] = 1;
            ++c;
            prev = 1;
        } else {
            bits[i] = 0;
            prev = 0;
        }
    }
    return {val[static_cast<size_t>(id(0, 0, 0))], bits};
}

double graph_score(const FactorGraph& g, const Eigen::Ref<const Eigen::VectorXd>& unary,
                   const Eigen::VectorXi& bits) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < g.n_vars; ++i)
        if (bits[i]) s += unary[i];
    for (Eigen::Index e = 0; e < g.n_edges(); ++e)
        if (bits[e] && bits[e + 1]) s += g.edges[e];
    return s;
}

}  // namespace

FactorGraph FactorGraph::ksubsets(Eigen::Index n, Eigen::Index k) {
    FactorGraph g;
    g.kind = GraphKind::KSubsets;
    g.n_vars = n;
    g.k = k;
    g.unary = Eigen::VectorXd::Zero(n);
    g.validate();
    return g;
}

FactorGraph FactorGraph::seq_ksubsets(Eigen::Index n, Eigen::Index k,
                                      Eigen::VectorXd edge_scores) {
    FactorGraph g;
    g.kind = GraphKind::SeqKSubsets;
    g.n_vars = n;
    g.k = k;
    g.unary = Eigen::VectorXd::Zero(n);
    g.edges = std::move(edge_scores);
    g.validate();
    return g;
}

double FactorGraph::vertex_norm_sq() const {
    if (kind == GraphKind::KSubsets) return static_cast<double>(k);
    return static_cast<double>(2 * n_vars - 1);
}

void FactorGraph::validate() const {
    if (n_vars < 1) throw std::invalid_argument("factor graph needs at least one variable");
    if (k < 1 || k > n_vars)
        throw std::invalid_argument("subset size k must satisfy 1 <= k <= n_vars");
    if (unary.size() != n_vars)
        throw std::invalid_argument("unary score vector must have length n_vars");
    if (kind == GraphKind::KSubsets) {
        if (edges.size() != 0)
            throw std::invalid_argument("k-subsets graphs carry no edge scores");
    } else if (edges.size() != n_vars - 1) {
        throw std::invalid_argument("sequential graphs need one edge score per adjacent pair");
    }
}

Eigen::VectorXd factor_indicators(const FactorGraph& g, const Eigen::VectorXi& bits) {
    Eigen::VectorXd f(g.n_edges());
    for (Eigen::Index e = 0; e < g.n_edges(); ++e)
        f[e] = (bits[e] && bits[e + 1]) ? 1.0 : 0.0;
    return f;
}

Structure map_oracle(const FactorGraph& g,
                     const Eigen::Ref<const Eigen::VectorXd>& adjusted_unary) {
    g.validate();
    check_unary(g, adjusted_unary);
    if (g.kind == GraphKind::KSubsets) return topk_select(adjusted_unary, g.k);

    auto unary = [&](Eigen::Index i, int b) { return b ? adjusted_unary[i] : 0.0; };
    auto edge = [&](Eigen::Index e, int a, int b) { return (a && b) ? g.edges[e] : 0.0; };
    auto [value, bits] = chain_budget_argmax(g.n_vars, g.k, unary, edge);
    Structure s;
    s.bits = std::move(bits);
    s.score = value;
    return s;
}

namespace {

struct ActiveSet {
    std::vector<Structure> verts;
    std::vector<Eigen::VectorXd> b;  // bits as doubles
    std::vector<Eigen::VectorXd> f;  // factor indicators
    std::vector<double> lin;         // eta . b + w . f per vertex
    Eigen::VectorXd lambda;

    void add(const FactorGraph& g, Structure s, const Eigen::VectorXd& eta) {
        Eigen::VectorXd bd = s.bits.cast<double>();
        Eigen::VectorXd fd = factor_indicators(g, s.bits);
        lin.push_back(eta.dot(bd) + (fd.size() ? g.edges.dot(fd) : 0.0));
        b.push_back(std::move(bd));
        f.push_back(std::move(fd));
        verts.push_back(std::move(s));
        Eigen::VectorXd nl(lambda.size() + 1);
        nl.head(lambda.size()) = lambda;
        nl[lambda.size()] = 0.0;
        lambda = std::move(nl);
    }

    void remove(Eigen::Index j) {
        const Eigen::Index s = static_cast<Eigen::Index>(verts.size());
        verts.erase(verts.begin() + j);
        b.erase(b.begin() + j);
        f.erase(f.begin() + j);
        lin.erase(lin.begin() + j);
        Eigen::VectorXd nl(s - 1);
        nl.head(j) = lambda.head(j);
        nl.tail(s - 1 - j) = lambda.tail(s - 1 - j);
        lambda = std::move(nl);
    }

    Eigen::Index size() const { return static_cast<Eigen::Index>(verts.size()); }

    Eigen::VectorXd mu_v() const {
        Eigen::VectorXd m = Eigen::VectorXd::Zero(b.front().size());
        for (Eigen::Index j = 0; j < size(); ++j) m += lambda[j] * b[static_cast<size_t>(j)];
        return m;
    }

    Eigen::VectorXd mu_f() const {
        Eigen::VectorXd m = Eigen::VectorXd::Zero(f.front().size());
        for (Eigen::Index j = 0; j < size(); ++j) m += lambda[j] * f[static_cast<size_t>(j)];
        return m;
    }

    // The quadratic acts on mu_v only, so weight directions that leave
    // mu_v and the total weight unchanged carry a purely linear factor
    // score. Walk any improving such direction to the boundary and drop
    // the blocking vertex; afterwards the KKT system is consistent.
    void purge_linear_directions() {
        while (size() > 1) {
            const Eigen::Index s = size();
            Eigen::MatrixXd m(b.front().size() + 1, s);
            for (Eigen::Index j = 0; j < s; ++j) {
                m.col(j).head(b.front().size()) = b[static_cast<size_t>(j)];
                m(b.front().size(), j) = 1.0;
            }
            const Eigen::MatrixXd kernel = Eigen::FullPivLU<Eigen::MatrixXd>(m).kernel();
            if (kernel.cols() == 1 && kernel.col(0).isZero()) return;
            double scale = 1.0;
            for (double v : lin) scale = std::max(scale, std::abs(v));
            Eigen::VectorXd dir;
            double best = 1e-12 * scale;
            for (Eigen::Index cidx = 0; cidx < kernel.cols(); ++cidx) {
                Eigen::VectorXd d = kernel.col(cidx).normalized();
                double gain = 0.0;
                for (Eigen::Index j = 0; j < s; ++j)
                    gain += d[j] * lin[static_cast<size_t>(j)];
                if (gain < 0.0) {
                    d = -d;
                    gain = -gain;
                }
                if (gain > best) {
                    best = gain;
                    dir = std::move(d);
                }
            }
            if (dir.size() == 0) return;
            double step = std::numeric_limits<double>::infinity();
            Eigen::Index blocking = -1;
            for (Eigen::Index j = 0; j < s; ++j)
                if (dir[j] < 0.0 && lambda[j] / -dir[j] < step) {
                    step = lambda[j] / -dir[j];
                    blocking = j;
                }
            if (blocking < 0) return;  // cannot happen for a sum-zero direction
            lambda += step * dir;
            lambda[blocking] = 0.0;
            remove(blocking);
        }
    }

    // Restricted maximizer over the convex hull of the current vertices:
    // solve the equality-constrained KKT system, walking back along the
    // segment and dropping the blocking vertex whenever a weight would
    // go negative.
    void solve_restricted() {
        while (true) {
            purge_linear_directions();
            const Eigen::Index s = size();
            Eigen::MatrixXd kkt(s + 1, s + 1);
            for (Eigen::Index i = 0; i < s; ++i)
                for (Eigen::Index j = 0; j <= i; ++j) {
                    const double gij = b[static_cast<size_t>(i)].dot(b[static_cast<size_t>(j)]);
                    kkt(i, j) = gij;
                    kkt(j, i) = gij;
                }
            kkt.row(s).head(s).setOnes();
            kkt.col(s).head(s).setOnes();
            kkt(s, s) = 0.0;
            Eigen::VectorXd rhs(s + 1);
            for (Eigen::Index i = 0; i < s; ++i) rhs[i] = lin[static_cast<size_t>(i)];
            rhs[s] = 1.0;
            Eigen::VectorXd sol = kkt.completeOrthogonalDecomposition().solve(rhs);
            Eigen::VectorXd cand = sol.head(s);

            if (cand.minCoeff() >= -1e-14) {
                lambda = cand.cwiseMax(0.0);
                lambda /= lambda.sum();
                return;
            }
            double step = 1.0;
            Eigen::Index blocking = -1;
            for (Eigen::Index j = 0; j < s; ++j) {
                if (cand[j] < 0.0) {
                    const double denom = lambda[j] - cand[j];
                    if (denom > 0.0) {
                        const double a = lambda[j] / denom;
                        if (a < step) {
                            step = a;
                            blocking = j;
                        }
                    }
                }
            }
            if (blocking < 0) {  // no feasible direction left; keep current weights
                return;
            }
            lambda += step * (cand - lambda);
            remove(blocking);
        }
    }
};

}  // namespace

Marginals sparsemap(const FactorGraph& g,
                    const Eigen::Ref<const Eigen::VectorXd>& theta,
                    double beta, const ActiveSetConfig& cfg) {
    g.validate();
    check_unary(g, theta);
    if (!(beta > 0.0) || !std::isfinite(beta))
        throw std::invalid_argument("beta must be positive and finite");
    if (cfg.max_iters < 1 || cfg.tol <= 0.0)
        throw std::invalid_argument("active set config must be positive");

    const Eigen::VectorXd eta = beta * theta;
    ActiveSet as;
    as.lambda = Eigen::VectorXd::Zero(0);
    as.add(g, map_oracle(g, eta), eta);
    as.lambda[0] = 1.0;

    auto objective = [&](const Eigen::VectorXd& mv, const Eigen::VectorXd& mf) {
        double obj = eta.dot(mv) - 0.5 * mv.squaredNorm();
        if (mf.size()) obj += g.edges.dot(mf);
        return obj;
    };

    Marginals out;
    out.objective_trace.reserve(static_cast<size_t>(cfg.max_iters) + 1);
    Eigen::VectorXd mv = as.mu_v();
    Eigen::VectorXd mf = as.mu_f();
    out.objective_trace.push_back(objective(mv, mf));

    int iters = 1;  // MAP calls so far
    bool converged = false;
    double gap = std::numeric_limits<double>::infinity();
    while (iters <= cfg.max_iters) {
        const Eigen::VectorXd grad = eta - mv;
        Structure next = map_oracle(g, grad);
        ++iters;
        double cur = grad.dot(mv);
        if (mf.size()) cur += g.edges.dot(mf);
        gap = next.score - cur;
        if (gap <= cfg.tol) {
            converged = true;
            break;
        }
        bool duplicate = false;
        for (const auto& v : as.verts)
            if (v.bits == next.bits) {
                duplicate = true;
                break;
            }
        if (duplicate) {  // restricted optimum already covers it; numerical tie
            converged = true;
            break;
        }

        as.add(g, std::move(next), eta);
        as.solve_restricted();
        for (Eigen::Index j = as.size() - 1; j >= 0; --j)
            if (as.lambda[j] <= cfg.tol && as.size() > 1) as.remove(j);
        as.lambda /= as.lambda.sum();
        mv = as.mu_v();
        mf = as.mu_f();
        out.objective_trace.push_back(objective(mv, mf));
    }
    if (!converged)
        throw ConvergenceError("sparsemap active set exhausted its iteration budget", gap);

    out.mu_v = std::move(mv);
    out.mu_f = std::move(mf);
    out.vertices = std::move(as.verts);
    out.weights = std::move(as.lambda);
    out.iterations = iters;
    return out;
}

Marginals ksubsets_projection(const Eigen::Ref<const Eigen::VectorXd>& theta,
                              Eigen::Index k, double beta) {
    const Eigen::Index n = theta.size();
    if (k < 1 || k > n) throw std::invalid_argument("k must satisfy 1 <= k <= n");
    if (!theta.allFinite()) throw std::invalid_argument("scores must be finite");
    if (!(beta > 0.0) || !std::isfinite(beta))
        throw std::invalid_argument("beta must be positive and finite");

    const Eigen::VectorXd z = beta * theta;
    const double kd = static_cast<double>(k);

    auto capped = [&](double tau) {
        return (z.array() - tau).max(0.0).min(1.0).sum();
    };

    Eigen::VectorXd mu(n);
    if (k == n) {
        mu.setOnes();
    } else {
        std::vector<double> bps(static_cast<size_t>(2 * n));
        for (Eigen::Index i = 0; i < n; ++i) {
            bps[static_cast<size_t>(2 * i)] = z[i] - 1.0;
            bps[static_cast<size_t>(2 * i + 1)] = z[i];
        }
        std::sort(bps.begin(), bps.end());
        // smallest breakpoint with capped sum <= k; the sum is n at the left
        // end and 0 at the right, nonincreasing in tau
        size_t lo = 0, hi = bps.size() - 1;
        while (lo < hi) {
            const size_t mid = (lo + hi) / 2;
            if (capped(bps[mid]) <= kd)
                hi = mid;
            else
                lo = mid + 1;
        }
        double tau;
        if (capped(bps[lo]) == kd) {
            tau = bps[lo];
        } else {
            // interior of the segment just below bps[lo]; classification is
            // constant there, so the threshold solves a linear equation
            const double left = bps[lo - 1];
            const double mid = 0.5 * (left + bps[lo]);
            double upper = 0.0, act_sum = 0.0;
            Eigen::Index act_n = 0;
            for (Eigen::Index i = 0; i < n; ++i) {
                const double v = z[i] - mid;
                if (v >= 1.0) {
                    upper += 1.0;
                } else if (v > 0.0) {
                    act_sum += z[i];
                    ++act_n;
                }
            }
            tau = (upper + act_sum - kd) / static_cast<double>(act_n);
        }
        mu = (z.array() - tau).max(0.0).min(1.0);
    }

    // Greedy vertex decomposition: repeatedly peel off the top-k indicator
    // with the largest feasible weight. Coordinates pinned at the remaining
    // mass or at zero stay pinned, so this finishes in at most n+1 rounds.
    Marginals out;
    out.mu_v = mu;
    out.mu_f = Eigen::VectorXd(0);
    Eigen::VectorXd rem = mu;
    double w_rem = 1.0;
    const Eigen::Index guard = 4 * n + 8;
    for (Eigen::Index round = 0; round < guard && w_rem > 1e-12; ++round) {
        Structure s = topk_select(rem, k);
        double gamma = w_rem;
        for (Eigen::Index i = 0; i < n; ++i) {
            if (s.bits[i])
                gamma = std::min(gamma, rem[i]);
            else
                gamma = std::min(gamma, w_rem - rem[i]);
        }
        if (gamma <= 0.0) break;
        s.score = z.dot(s.bits.cast<double>());
        out.vertices.push_back(std::move(s));
        for (Eigen::Index i = 0; i < n; ++i)
            if (out.vertices.back().bits[i]) rem[i] -= gamma;
        w_rem -= gamma;
        out.weights.conservativeResize(out.weights.size() + 1);
        out.weights[out.weights.size() - 1] = gamma;
    }
    out.weights /= out.weights.sum();
    out.iterations = static_cast<int>(out.vertices.size());
    return out;
}

bool structured_margin_check(const FactorGraph& g,
                             const Eigen::Ref<const Eigen::VectorXd>& theta,
                             const Structure& y) {
    g.validate();
    check_unary(g, theta);
    if (y.bits.size() != g.n_vars || y.bits.sum() != g.k)
        throw std::invalid_argument("structure is not a valid vertex for this graph");

    const double own = graph_score(g, theta, y.bits);

    double best;
    if (g.kind == GraphKind::KSubsets) {
        // theta^T y' + 1/2 ||y - y'||^2 = (theta - y)^T y' + k over raw bits
        Eigen::VectorXd adj = theta - y.bits.cast<double>();
        best = topk_select(adj, g.k).score + static_cast<double>(g.k);
    } else {
        // full one-hot encoding: each differing variable contributes 1,
        // each differing factor configuration contributes 1
        auto unary = [&](Eigen::Index i, int b) {
            return (b ? theta[i] : 0.0) + ((b != y.bits[i]) ? 1.0 : 0.0);
        };
        auto edge = [&](Eigen::Index e, int a, int b) {
            double sc = (a && b) ? g.edges[e] : 0.0;
            if (a != y.bits[e] || b != y.bits[e + 1]) sc += 1.0;
            return sc;
        };
        best = chain_budget_argmax(g.n_vars, g.k, unary, edge).first;
    }
    return own >= best;
}

double structured_fy_loss(const FactorGraph& g,
                          const Eigen::Ref<const Eigen::VectorXd>& theta,
                          const Structure& y) {
    g.validate();
    check_unary(g, theta);
    if (y.bits.size() != g.n_vars || y.bits.sum() != g.k)
        throw std::invalid_argument("structure is not a valid vertex for this graph");

    const Marginals m = sparsemap(g, theta, 1.0);
    double conj = theta.dot(m.mu_v) - 0.5 * m.mu_v.squaredNorm();
    if (m.mu_f.size()) conj += g.edges.dot(m.mu_f);
    const double omega_y = 0.5 * static_cast<double>(g.k);
    return omega_y + conj - graph_score(g, theta, y.bits);
}

}  // namespace hfy
