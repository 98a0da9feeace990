#include "hfy/transforms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace hfy {

namespace {

constexpr double kSupportSnap = 1e-12;  // bisection outputs below this are exact zeros

void check_scores(const Eigen::Ref<const Eigen::VectorXd>& theta) {
    if (theta.size() < 1)
        throw std::invalid_argument("scores must have at least one entry");
    if (!theta.allFinite())
        throw std::invalid_argument("scores must be finite");
}

void check_simplex(const Eigen::Ref<const Eigen::VectorXd>& y) {
    if (y.size() < 1)
        throw std::invalid_argument("distribution must have at least one entry");
    if (y.minCoeff() < -1e-12 || std::abs(y.sum() - 1.0) > 1e-8)
        throw std::invalid_argument("distribution must lie on the simplex");
}

Eigen::VectorXd softmax_stable(const Eigen::Ref<const Eigen::VectorXd>& z) {
    Eigen::VectorXd y = (z.array() - z.maxCoeff()).exp();
    return y / y.sum();
}

// Euclidean projection of z onto the simplex: sort-and-threshold, exact
// zeros below the threshold.
Eigen::VectorXd sparsemax_project(const Eigen::Ref<const Eigen::VectorXd>& z) {
    const Eigen::Index n = z.size();
    std::vector<double> sorted(z.data(), z.data() + n);
    std::sort(sorted.begin(), sorted.end(), std::greater<double>());
    double cumsum = 0.0;
    double tau = sorted[0] - 1.0;
    for (Eigen::Index k = 0; k < n; ++k) {
        cumsum += sorted[k];
        const double cand = (cumsum - 1.0) / static_cast<double>(k + 1);
        if (static_cast<double>(k + 1) * sorted[k] + 1.0 > cumsum)
            tau = cand;
        else
            break;
    }
    Eigen::VectorXd y = (z.array() - tau).max(0.0);
    y /= y.sum();
    return y;
}

// Bisection for Tsallis alpha > 1 on the dual threshold mu, with
// y_i = [(alpha-1)(z_i - mu)]_+^(1/(alpha-1)). The bracket
// [z_max - 1/(alpha-1), z_max] pins the normalization root: the upper
// end gives sum 0, the lower end at least 1 (the top coordinate alone
// contributes 1).
Eigen::VectorXd entmax_bisect(const Eigen::Ref<const Eigen::VectorXd>& z,
                              double alpha, int iters) {
    const double am1 = alpha - 1.0;
    const double expo = 1.0 / am1;
    double lo = z.maxCoeff() - 1.0 / am1;
    double hi = z.maxCoeff();
    double mu = 0.5 * (lo + hi);
    for (int t = 0; t < iters; ++t) {
        mu = 0.5 * (lo + hi);
        const double sum = (am1 * (z.array() - mu)).max(0.0).pow(expo).sum();
        if (sum < 1.0)
            hi = mu;
        else
            lo = mu;
    }
    Eigen::VectorXd y = (am1 * (z.array() - mu)).max(0.0).pow(expo);
    y /= y.sum();
    return y;
}

Eigen::VectorXd snap_support(Eigen::VectorXd y) {
    bool snapped = false;
    for (Eigen::Index i = 0; i < y.size(); ++i) {
        if (y[i] != 0.0 && y[i] < kSupportSnap) {
            y[i] = 0.0;
            snapped = true;
        }
    }
    if (snapped) y /= y.sum();
    return y;
}

}  // namespace

void EntropyKind::validate() const {
    if (!std::isfinite(alpha) || alpha <= 0.0)
        throw std::invalid_argument("entropy alpha must be positive and finite");
    if (family == EntropyFamily::Tsallis && alpha < 1.0)
        throw std::invalid_argument("tsallis family requires alpha >= 1");
    if (family == EntropyFamily::Norm && alpha <= 1.0)
        throw std::invalid_argument("norm family requires alpha > 1");
}

Distribution Distribution::from_probs(Eigen::VectorXd p) {
    Distribution d;
    d.support.reserve(static_cast<size_t>(p.size()));
    for (Eigen::Index i = 0; i < p.size(); ++i)
        if (p[i] > 0.0) d.support.push_back(i);
    d.probs = std::move(p);
    return d;
}

double negentropy(const EntropyKind& kind, const Eigen::Ref<const Eigen::VectorXd>& y) {
    kind.validate();
    check_simplex(y);
    if (kind.family == EntropyFamily::Tsallis) {
        if (kind.alpha == 1.0) {
            double acc = 0.0;  // 0 log 0 := 0
            for (Eigen::Index i = 0; i < y.size(); ++i)
                if (y[i] > 0.0) acc += y[i] * std::log(y[i]);
            return acc;
        }
        const double a = kind.alpha;
        return (y.array().max(0.0).pow(a).sum() - 1.0) / (a * (a - 1.0));
    }
    const double a = kind.alpha;
    return -1.0 + std::pow(y.array().max(0.0).pow(a).sum(), 1.0 / a);
}

Distribution transform(const EntropyKind& kind,
                       const Eigen::Ref<const Eigen::VectorXd>& theta,
                       double beta) {
    kind.validate();
    check_scores(theta);
    if (!(beta > 0.0) || !std::isfinite(beta))
        throw std::invalid_argument("beta must be positive and finite");

    const Eigen::Index n = theta.size();
    if (n == 1) return Distribution::from_probs(Eigen::VectorXd::Ones(1));

    const Eigen::VectorXd z = beta * theta;

    const MarginSpec ms = margin_of(kind);
    if (ms.has_margin) {
        // Score gap at or above the margin forces an exact one-hot output;
        // the ">=" resolves exact boundary ties to the vertex.
        Eigen::Index top;
        const double zmax = z.maxCoeff(&top);
        double second = -std::numeric_limits<double>::infinity();
        for (Eigen::Index i = 0; i < n; ++i)
            if (i != top && z[i] > second) second = z[i];
        if (zmax - second >= ms.m) {
            Eigen::VectorXd y = Eigen::VectorXd::Zero(n);
            y[top] = 1.0;
            return Distribution::from_probs(std::move(y));
        }
    }

    if (kind.family == EntropyFamily::Tsallis) {
        if (kind.alpha == 1.0)
            return Distribution::from_probs(softmax_stable(z));
        if (kind.alpha == 2.0)
            return Distribution::from_probs(sparsemax_project(z));
        return Distribution::from_probs(snap_support(entmax_bisect(z, kind.alpha, 60)));
    }
    return Distribution::from_probs(snap_support(normmax_bisect(z, kind.alpha, 60).probs));
}

Distribution normmax_bisect(const Eigen::Ref<const Eigen::VectorXd>& theta,
                            double alpha, int iters) {
    if (!std::isfinite(alpha) || alpha <= 1.0)
        throw std::invalid_argument("normmax requires alpha > 1");
    if (iters < 1)
        throw std::invalid_argument("normmax requires at least one bisection step");
    check_scores(theta);

    const Eigen::Index n = theta.size();
    if (n == 1) return Distribution::from_probs(Eigen::VectorXd::Ones(1));

    const double zmax = theta.maxCoeff();
    const double expo_z = alpha / (alpha - 1.0);
    const double expo_y = 1.0 / (alpha - 1.0);
    double lo = zmax - 1.0;
    double hi = zmax - std::pow(static_cast<double>(n), 1.0 - alpha);
    double mu = 0.5 * (lo + hi);
    for (int t = 0; t < iters; ++t) {
        mu = 0.5 * (lo + hi);
        const double sum = (theta.array() - mu).max(0.0).pow(expo_z).sum();
        if (sum < 1.0)
            hi = mu;
        else
            lo = mu;
    }
    Eigen::VectorXd y = (theta.array() - mu).max(0.0).pow(expo_y);
    y /= y.sum();
    return Distribution::from_probs(std::move(y));
}

double fy_loss(const EntropyKind& kind,
               const Eigen::Ref<const Eigen::VectorXd>& theta,
               const Eigen::Ref<const Eigen::VectorXd>& y) {
    check_simplex(y);
    const Distribution yhat = transform(kind, theta, 1.0);
    const double omega_y = negentropy(kind, y);
    const double omega_yhat = negentropy(kind, yhat.probs);
    return omega_y - omega_yhat - theta.dot(y - yhat.probs);
}

Eigen::VectorXd fy_loss_grad(const EntropyKind& kind,
                             const Eigen::Ref<const Eigen::VectorXd>& theta,
                             const Eigen::Ref<const Eigen::VectorXd>& y) {
    check_simplex(y);
    return transform(kind, theta, 1.0).probs - y;
}

MarginSpec margin_of(const EntropyKind& kind) {
    kind.validate();
    if (kind.family == EntropyFamily::Norm) return {true, 1.0};
    if (kind.alpha > 1.0) return {true, 1.0 / (kind.alpha - 1.0)};
    return {false, 0.0};
}

}  // namespace hfy
