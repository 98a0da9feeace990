#include "hfy/hopfield.hpp"

#include <cmath>
#include <limits>

#include "hfy/errors.hpp"
#include "hfy/random.hpp"

namespace hfy {

namespace {

void check_query(const PatternSet& ps, const Eigen::Ref<const Eigen::VectorXd>& q) {
    if (q.size() != ps.dim())
        throw std::invalid_argument("query dimension does not match the pattern set");
    if (!q.allFinite()) throw std::invalid_argument("query must be finite");
}

const FactorGraph& graph_for(const PatternSet& ps, const RetrievalConfig& cfg) {
    const auto& g = std::get<FactorGraph>(cfg.method);
    if (g.n_vars != ps.count())
        throw std::invalid_argument("factor graph size does not match the pattern count");
    return g;
}

// Uniform mixture over all k-subsets: marginal k/N per variable and
// k(k-1)/(N(N-1)) per adjacent pair. This is the structured stand-in for
// the 1/N target of the simplex energy.
void uniform_mixture(const FactorGraph& g, Eigen::VectorXd& ybar_v, Eigen::VectorXd& ybar_f) {
    const double n = static_cast<double>(g.n_vars);
    const double k = static_cast<double>(g.k);
    ybar_v = Eigen::VectorXd::Constant(g.n_vars, k / n);
    if (g.n_edges() > 0)
        ybar_f = Eigen::VectorXd::Constant(g.n_edges(), k * (k - 1.0) / (n * (n - 1.0)));
    else
        ybar_f = Eigen::VectorXd(0);
}

bool vertex_of(const Marginals& m) {
    return m.is_vertex();
}

}  // namespace

PatternSet::PatternSet(Eigen::MatrixXd X) : patterns(std::move(X)) {
    if (patterns.rows() < 1 || patterns.cols() < 1)
        throw std::invalid_argument("pattern set must be a nonempty matrix");
    if (!patterns.allFinite())
        throw std::invalid_argument("patterns must be finite");
    mean = patterns.colwise().mean();
    max_norm = patterns.rowwise().norm().maxCoeff();
}

void RetrievalConfig::validate() const {
    if (!(beta > 0.0) || !std::isfinite(beta))
        throw std::invalid_argument("beta must be positive and finite");
    if (max_steps < 1) throw std::invalid_argument("max_steps must be positive");
    if (!(fix_tol > 0.0)) throw std::invalid_argument("fix_tol must be positive");
}

double energy(const PatternSet& ps, const Eigen::Ref<const Eigen::VectorXd>& q,
              const RetrievalConfig& cfg) {
    cfg.validate();
    check_query(ps, q);
    const Eigen::VectorXd theta = ps.patterns * q;

    if (std::holds_alternative<EntropyKind>(cfg.method)) {
        const auto& kind = std::get<EntropyKind>(cfg.method);
        const Eigen::VectorXd target =
            Eigen::VectorXd::Constant(ps.count(), 1.0 / static_cast<double>(ps.count()));
        const double loss = fy_loss(kind, cfg.beta * theta, target);
        return -loss / cfg.beta + 0.5 * (q - ps.mean).squaredNorm() +
               0.5 * (ps.max_norm * ps.max_norm - ps.mean.squaredNorm());
    }

    const FactorGraph& g = graph_for(ps, cfg);
    Eigen::VectorXd ybar_v, ybar_f;
    uniform_mixture(g, ybar_v, ybar_f);
    const Marginals m = sparsemap(g, theta, cfg.beta, cfg.active_set);
    double conj = cfg.beta * theta.dot(m.mu_v) - 0.5 * m.mu_v.squaredNorm();
    if (m.mu_f.size()) conj += g.edges.dot(m.mu_f);
    double target_score = cfg.beta * theta.dot(ybar_v);
    if (ybar_f.size()) target_score += g.edges.dot(ybar_f);
    const double kd = static_cast<double>(g.k);
    const double omega_bar = 0.5 * kd * kd / static_cast<double>(g.n_vars);
    const double loss = omega_bar + conj - target_score;

    // The proximity center and norm cap scale with the association size.
    const Eigen::VectorXd center = kd * ps.mean;
    const double cap = kd * ps.max_norm;
    return -loss / cfg.beta + 0.5 * (q - center).squaredNorm() +
           0.5 * (cap * cap - center.squaredNorm());
}

std::pair<Eigen::VectorXd, AttentionWeights> update_step(
    const PatternSet& ps, const Eigen::Ref<const Eigen::VectorXd>& q,
    const RetrievalConfig& cfg) {
    cfg.validate();
    check_query(ps, q);
    const Eigen::VectorXd theta = ps.patterns * q;

    if (std::holds_alternative<EntropyKind>(cfg.method)) {
        Distribution y = transform(std::get<EntropyKind>(cfg.method), theta, cfg.beta);
        Eigen::VectorXd q_next = ps.patterns.transpose() * y.probs;
        return {std::move(q_next), AttentionWeights(std::move(y))};
    }
    const FactorGraph& g = graph_for(ps, cfg);
    Marginals m = sparsemap(g, theta, cfg.beta, cfg.active_set);
    Eigen::VectorXd q_next = ps.patterns.transpose() * m.mu_v;
    return {std::move(q_next), AttentionWeights(std::move(m))};
}

RetrievalResult retrieve(const PatternSet& ps,
                         const Eigen::Ref<const Eigen::VectorXd>& q0,
                         const RetrievalConfig& cfg) {
    cfg.validate();
    check_query(ps, q0);

    RetrievalResult res;
    res.trajectory.push_back(q0);
    Eigen::VectorXd q = q0;
    AttentionWeights y;
    for (int t = 0; t < cfg.max_steps; ++t) {
        auto [q_next, y_next] = update_step(ps, q, cfg);
        res.trajectory.push_back(q_next);
        y = std::move(y_next);
        const double moved = (q_next - q).norm();
        q = std::move(q_next);
        if (moved <= cfg.fix_tol) {
            res.converged = true;
            break;
        }
    }
    res.q_final = q;
    res.y_final = std::move(y);

    // Def.-style step count: the first iterate that already equals the
    // final fixed point.
    res.steps = static_cast<int>(res.trajectory.size()) - 1;
    for (size_t s = 0; s < res.trajectory.size(); ++s) {
        if ((res.trajectory[s] - res.q_final).norm() <= cfg.fix_tol) {
            res.steps = static_cast<int>(s);
            break;
        }
    }

    if (res.converged) {
        if (std::holds_alternative<Distribution>(res.y_final)) {
            const auto& d = std::get<Distribution>(res.y_final);
            if (d.is_one_hot()) res.exact_pattern = RetrievedPattern(d.support[0]);
        } else {
            const auto& m = std::get<Marginals>(res.y_final);
            if (vertex_of(m)) res.exact_pattern = RetrievedPattern(m.vertices[0]);
        }
    }
    return res;
}

SeparationReport separation_report(const PatternSet& ps, const RetrievalConfig& cfg,
                                   const std::vector<Structure>& candidates) {
    cfg.validate();
    SeparationReport rep;

    if (std::holds_alternative<EntropyKind>(cfg.method)) {
        const auto& kind = std::get<EntropyKind>(cfg.method);
        const MarginSpec ms = margin_of(kind);
        rep.margin_threshold =
            ms.has_margin ? ms.m / cfg.beta : std::numeric_limits<double>::infinity();
        const Eigen::Index n = ps.count();
        const Eigen::MatrixXd gram = ps.patterns * ps.patterns.transpose();
        rep.delta.resize(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            double best = -std::numeric_limits<double>::infinity();
            for (Eigen::Index j = 0; j < n; ++j)
                if (j != i && gram(i, j) > best) best = gram(i, j);
            rep.delta[i] = gram(i, i) - best;  // +inf for a single pattern
        }
    } else {
        if (candidates.empty())
            throw std::invalid_argument("structured separation needs explicit candidates");
        const FactorGraph& g = graph_for(ps, cfg);
        const double kd = static_cast<double>(g.k);
        rep.margin_threshold =
            (g.kind == GraphKind::KSubsets ? kd : 6.0 * kd) / cfg.beta;
        const Eigen::Index n = static_cast<Eigen::Index>(candidates.size());
        Eigen::MatrixXd assoc(n, ps.dim());
        for (Eigen::Index i = 0; i < n; ++i) {
            const auto& c = candidates[static_cast<size_t>(i)];
            if (c.bits.size() != g.n_vars || c.bits.sum() != g.k)
                throw std::invalid_argument("candidate is not a valid vertex for this graph");
            assoc.row(i) = (ps.patterns.transpose() * c.bits.cast<double>()).transpose();
        }
        const Eigen::MatrixXd gram = assoc * assoc.transpose();
        rep.delta.resize(n);
        for (Eigen::Index i = 0; i < n; ++i) {
            double best = -std::numeric_limits<double>::infinity();
            for (Eigen::Index j = 0; j < n; ++j)
                if (j != i && gram(i, j) > best) best = gram(i, j);
            rep.delta[i] = gram(i, i) - best;
        }
    }

    rep.satisfied = rep.delta.array() >= rep.margin_threshold;
    return rep;
}

namespace {

// Points on the sphere of radius M, pairwise angle >= pi/3 enforced by
// rejection.
Eigen::MatrixXd sample_separated_sphere(int dim, int n, double radius, Rng& rng) {
    Eigen::MatrixXd X(n, dim);
    const double cos_cap = 0.5 * radius * radius;  // cos(pi/3) * M^2
    const long budget = 2000L * n + 10000L;
    long attempts = 0;
    int have = 0;
    while (have < n) {
        if (++attempts > budget)
            throw GenerationError("could not place patterns at pairwise angle >= pi/3; "
                                  "too many patterns for this dimension");
        Eigen::VectorXd v = radius * rng.unit_vector(dim);
        bool ok = true;
        for (int j = 0; j < have; ++j)
            if (X.row(j).dot(v) > cos_cap) {
                ok = false;
                break;
            }
        if (ok) X.row(have++) = v.transpose();
    }
    return X;
}

void check_sampler_args(int dim, int n, double radius) {
    if (dim < 1 || n < 1) throw std::invalid_argument("dimension and count must be positive");
    if (!(radius > 0.0)) throw std::invalid_argument("radius must be positive");
}

double one_step_success_rate(const Eigen::MatrixXd& X, double beta, double eps,
                             const EntropyKind& kind, int rounds, Rng& rng) {
    const PatternSet ps(X);
    RetrievalConfig cfg;
    cfg.method = kind;
    cfg.beta = beta;
    int hits = 0;
    const int n = static_cast<int>(X.rows());
    for (int r = 0; r < rounds; ++r) {
        for (int i = 0; i < n; ++i) {
            const Eigen::VectorXd q0 =
                X.row(i).transpose() + eps * rng.unit_vector(X.cols());
            auto [q1, y] = update_step(ps, q0, cfg);
            const auto& d = std::get<Distribution>(y);
            if (d.is_one_hot() && d.support[0] == i) ++hits;
        }
    }
    return static_cast<double>(hits) / static_cast<double>(n * rounds);
}

}  // namespace

Eigen::MatrixXd sample_sphere_uniform(int dim, int n, double radius, std::uint64_t seed) {
    check_sampler_args(dim, n, radius);
    Rng rng(seed);
    Eigen::MatrixXd X(n, dim);
    for (int i = 0; i < n; ++i) X.row(i) = (radius * rng.unit_vector(dim)).transpose();
    return X;
}

Eigen::MatrixXd sample_sphere_min_angle(int dim, int n, double radius,
                                        std::uint64_t seed) {
    check_sampler_args(dim, n, radius);
    Rng rng(seed);
    return sample_separated_sphere(dim, n, radius, rng);
}

double capacity_trial(int dim, int n_patterns, double beta, double eps,
                      const EntropyKind& kind, std::uint64_t seed, double radius,
                      int rounds) {
    if (dim < 1 || n_patterns < 1 || rounds < 1)
        throw std::invalid_argument("capacity trial sizes must be positive");
    if (eps < 0.0 || !(radius > 0.0))
        throw std::invalid_argument("eps must be nonnegative and radius positive");
    kind.validate();
    Rng rng(seed);
    const Eigen::MatrixXd X = sample_separated_sphere(dim, n_patterns, radius, rng);
    return one_step_success_rate(X, beta, eps, kind, rounds, rng);
}

RandomCapacityResult capacity_trial_random(int dim, double beta, double zeta, double p,
                                           const EntropyKind& kind, std::uint64_t seed,
                                           double radius, int rounds) {
    if (dim < 2) throw std::invalid_argument("random capacity trial needs dim >= 2");
    if (!(zeta > 1.0) || !(p > 0.0) || p >= 1.0)
        throw std::invalid_argument("need zeta > 1 and p in (0,1)");
    kind.validate();
    const MarginSpec ms = margin_of(kind);
    if (!ms.has_margin)
        throw std::invalid_argument("capacity trials need a method with a margin");

    // kappa_d = Gamma((d+1)/2) / (d sqrt(pi) Gamma(d/2)), d = dim - 1
    const double d = static_cast<double>(dim - 1);
    const double log_kappa = std::lgamma((d + 1.0) / 2.0) - std::lgamma(d / 2.0) -
                             std::log(d) - 0.5 * std::log(M_PI);
    const double n_real = std::sqrt(2.0 * p / std::exp(log_kappa)) *
                          std::pow(zeta, (d) / 2.0);
    RandomCapacityResult out;
    out.n_patterns = std::max(2, static_cast<int>(std::floor(n_real)));
    out.eps_bound = std::max(
        0.0, 0.5 * radius * (1.0 - std::cos(1.0 / zeta)) - ms.m / (2.0 * beta * radius));

    Rng rng(seed);
    Eigen::MatrixXd X(out.n_patterns, dim);
    for (int i = 0; i < out.n_patterns; ++i)
        X.row(i) = (radius * rng.unit_vector(dim)).transpose();
    out.success_rate = one_step_success_rate(X, beta, out.eps_bound, kind, rounds, rng);
    return out;
}

}  // namespace hfy
