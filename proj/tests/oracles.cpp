#include "oracles.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace oracle {

namespace {

double omega_value(const hfy::EntropyKind& kind, const Eigen::VectorXd& y) {
    using hfy::EntropyFamily;
    if (kind.family == EntropyFamily::Tsallis) {
        if (kind.alpha == 1.0) {
            double acc = 0.0;
            for (Eigen::Index i = 0; i < y.size(); ++i)
                if (y[i] > 0.0) acc += y[i] * std::log(y[i]);
            return acc;
        }
        return (y.array().pow(kind.alpha).sum() - 1.0) / (kind.alpha * (kind.alpha - 1.0));
    }
    return -1.0 + std::pow(y.array().pow(kind.alpha).sum(), 1.0 / kind.alpha);
}

// Interior stationary point of theta^T y - scale * Omega(y) restricted to
// support S, or empty if the restricted maximizer sits on the boundary.
Eigen::VectorXd stationary_on_support(const hfy::EntropyKind& kind,
                                      const Eigen::VectorXd& theta, double scale,
                                      const std::vector<Eigen::Index>& S) {
    using hfy::EntropyFamily;
    const Eigen::Index n = theta.size();
    Eigen::VectorXd y = Eigen::VectorXd::Zero(n);

    if (kind.family == EntropyFamily::Tsallis && kind.alpha == 1.0) {
        // Shannon: closed form on the support
        double zmax = -std::numeric_limits<double>::infinity();
        for (auto i : S) zmax = std::max(zmax, theta[i] / scale);
        double Z = 0.0;
        for (auto i : S) Z += std::exp(theta[i] / scale - zmax);
        for (auto i : S) y[i] = std::exp(theta[i] / scale - zmax) / Z;
        return y;
    }

    const double a = kind.alpha;
    const bool tsallis = kind.family == EntropyFamily::Tsallis;
    // Tsallis: y_i = [(a-1)(theta_i - mu)/scale]^{1/(a-1)}, sum = 1.
    // Norm:    y_i ~ ((theta_i - mu)/scale)^{1/(a-1)},
    //          sum ((theta_i - mu)/scale)^{a/(a-1)} = 1.
    const double expo = tsallis ? 1.0 / (a - 1.0) : a / (a - 1.0);
    auto zsum = [&](double mu) {
        double acc = 0.0;
        for (auto i : S) {
            double v = (theta[i] - mu) / scale;
            if (tsallis) v *= (a - 1.0);
            if (v > 0.0) acc += std::pow(v, expo);
        }
        return acc;
    };

    double hi = std::numeric_limits<double>::infinity();
    for (auto i : S) hi = std::min(hi, theta[i]);
    if (zsum(hi) >= 1.0) return Eigen::VectorXd();  // root not interior
    double lo = hi - scale;
    while (zsum(lo) < 1.0) lo -= std::max(1.0, scale);
    for (int t = 0; t < 200; ++t) {
        const double mid = 0.5 * (lo + hi);
        if (zsum(mid) < 1.0)
            hi = mid;
        else
            lo = mid;
    }
    const double mu = 0.5 * (lo + hi);
    double total = 0.0;
    for (auto i : S) {
        double v = (theta[i] - mu) / scale;
        if (tsallis) v *= (a - 1.0);
        y[i] = v > 0.0 ? std::pow(v, 1.0 / (a - 1.0)) : 0.0;
        total += y[i];
    }
    if (total <= 0.0) return Eigen::VectorXd();
    for (auto i : S) y[i] /= total;
    for (auto i : S)
        if (y[i] <= 0.0) return Eigen::VectorXd();
    return y;
}

}  // namespace

Eigen::VectorXd transform_enum(const hfy::EntropyKind& kind,
                               const Eigen::Ref<const Eigen::VectorXd>& theta,
                               double scale) {
    const Eigen::Index n = theta.size();
    if (n > 20) throw std::invalid_argument("enumeration oracle limited to small N");
    double best = -std::numeric_limits<double>::infinity();
    Eigen::VectorXd besty;
    for (unsigned mask = 1; mask < (1u << n); ++mask) {
        std::vector<Eigen::Index> S;
        for (Eigen::Index i = 0; i < n; ++i)
            if (mask & (1u << i)) S.push_back(i);
        const Eigen::VectorXd y = stationary_on_support(kind, theta, scale, S);
        if (y.size() == 0) continue;
        const double obj = theta.dot(y) - scale * omega_value(kind, y);
        if (obj > best) {
            best = obj;
            besty = y;
        }
    }
    return besty;
}

Eigen::VectorXd project_simplex(Eigen::VectorXd z) {
    const Eigen::Index n = z.size();
    std::vector<bool> active(static_cast<size_t>(n), true);
    while (true) {
        double sum = 0.0;
        Eigen::Index count = 0;
        for (Eigen::Index i = 0; i < n; ++i)
            if (active[static_cast<size_t>(i)]) {
                sum += z[i];
                ++count;
            }
        const double tau = (sum - 1.0) / static_cast<double>(count);
        bool changed = false;
        for (Eigen::Index i = 0; i < n; ++i)
            if (active[static_cast<size_t>(i)] && z[i] <= tau) {
                active[static_cast<size_t>(i)] = false;
                changed = true;
            }
        if (!changed) {
            Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
            for (Eigen::Index i = 0; i < n; ++i)
                if (active[static_cast<size_t>(i)]) y[i] = z[i] - tau;
            return y;
        }
    }
}

std::vector<Eigen::VectorXi> enumerate_structures(const hfy::FactorGraph& g) {
    std::vector<Eigen::VectorXi> out;
    std::vector<Eigen::Index> comb(static_cast<size_t>(g.k));
    std::iota(comb.begin(), comb.end(), 0);
    while (true) {
        Eigen::VectorXi bits = Eigen::VectorXi::Zero(g.n_vars);
        for (auto i : comb) bits[i] = 1;
        out.push_back(std::move(bits));
        // next combination
        Eigen::Index j = g.k - 1;
        while (j >= 0 && comb[static_cast<size_t>(j)] == g.n_vars - g.k + j) --j;
        if (j < 0) break;
        ++comb[static_cast<size_t>(j)];
        for (Eigen::Index l = j + 1; l < g.k; ++l)
            comb[static_cast<size_t>(l)] = comb[static_cast<size_t>(l - 1)] + 1;
    }
    return out;
}

QpSolution sparsemap_enum(const hfy::FactorGraph& g,
                          const Eigen::Ref<const Eigen::VectorXd>& theta,
                          double beta, double gap_tol, long max_iters) {
    const auto verts = enumerate_structures(g);
    const Eigen::Index V = static_cast<Eigen::Index>(verts.size());
    const Eigen::Index n = g.n_vars;
    const Eigen::Index ne = g.n_edges();

    Eigen::MatrixXd B(n, V), F(ne, V);
    for (Eigen::Index j = 0; j < V; ++j) {
        B.col(j) = verts[static_cast<size_t>(j)].cast<double>();
        for (Eigen::Index e = 0; e < ne; ++e)
            F(e, j) = (verts[static_cast<size_t>(j)][e] &&
                       verts[static_cast<size_t>(j)][e + 1])
                          ? 1.0
                          : 0.0;
    }
    Eigen::VectorXd c = B.transpose() * (beta * theta);
    if (ne > 0) c += F.transpose() * g.edges;
    const Eigen::MatrixXd G = B.transpose() * B;

    // maximize c^T lam - 1/2 lam^T G lam over the simplex; spectral-gap
    // steps with Barzilai-Borwein scaling and a Frank-Wolfe gap stop
    const double L = std::max(1.0, G.cwiseAbs().colwise().sum().maxCoeff());
    Eigen::VectorXd lam = Eigen::VectorXd::Constant(V, 1.0 / static_cast<double>(V));
    Eigen::VectorXd grad = c - G * lam;
    Eigen::VectorXd lam_prev = lam, grad_prev = grad;
    double gap = std::numeric_limits<double>::infinity();
    for (long t = 0; t < max_iters; ++t) {
        grad = c - G * lam;
        gap = grad.maxCoeff() - grad.dot(lam);
        const double scale = std::max(1.0, std::abs(c.dot(lam)));
        if (gap <= gap_tol * scale) break;
        double step = 1.0 / L;
        if (t > 0) {
            const Eigen::VectorXd s = lam - lam_prev;
            const Eigen::VectorXd yv = grad_prev - grad;  // = G s
            const double sy = s.dot(yv);
            if (sy > 0.0) step = s.dot(s) / sy;
        }
        lam_prev = lam;
        grad_prev = grad;
        lam = project_simplex(lam + step * grad);
    }

    QpSolution sol;
    sol.mu_v = B * lam;
    sol.mu_f = ne > 0 ? Eigen::VectorXd(F * lam) : Eigen::VectorXd(0);
    sol.objective = c.dot(lam) - 0.5 * lam.transpose() * G * lam;
    sol.gap = gap;
    return sol;
}

}  // namespace oracle
