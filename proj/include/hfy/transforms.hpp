#ifndef HFY_TRANSFORMS_HPP
#define HFY_TRANSFORMS_HPP

#include <Eigen/Core>
#include <stdexcept>
#include <vector>

// Regularized argmax transformations over the probability simplex
// (softmax, sparsemax, entmax, normmax), the negentropies that induce
// them, Fenchel-Young losses, and margin constants.

namespace hfy {

enum class EntropyFamily { Tsallis, Norm };

/// Selects a negentropy: Tsallis family with alpha >= 1 (alpha = 1 is
/// Shannon/softmax, alpha = 2 is sparsemax) or the norm family with
/// alpha > 1.
struct EntropyKind {
    EntropyFamily family = EntropyFamily::Tsallis;
    double alpha = 1.0;

    static EntropyKind softmax() { return {EntropyFamily::Tsallis, 1.0}; }
    static EntropyKind sparsemax() { return {EntropyFamily::Tsallis, 2.0}; }
    static EntropyKind entmax(double alpha) { return {EntropyFamily::Tsallis, alpha}; }
    static EntropyKind normmax(double alpha) { return {EntropyFamily::Norm, alpha}; }

    void validate() const;
};

/// A point on the simplex with its support tracked explicitly.
/// Entries outside `support` are exact zeros, so support queries need
/// no thresholds.
struct Distribution {
    Eigen::VectorXd probs;
    std::vector<Eigen::Index> support;  // ascending indices with probs > 0

    bool is_one_hot() const { return support.size() == 1; }

    static Distribution from_probs(Eigen::VectorXd p);
};

struct MarginSpec {
    bool has_margin = false;
    double m = 0.0;  // valid only when has_margin
};

/// Generalized negentropy Omega(y) <= 0; zero exactly on one-hot vectors.
double negentropy(const EntropyKind& kind, const Eigen::Ref<const Eigen::VectorXd>& y);

/// The maximizer of beta * theta^T y - Omega(y) over the simplex.
/// Sparse families report exact zeros in the output support; score gaps
/// at or above the margin yield exact one-hot results.
Distribution transform(const EntropyKind& kind,
                       const Eigen::Ref<const Eigen::VectorXd>& theta,
                       double beta = 1.0);

/// Normmax by bisection on the threshold mu, bracketed in
/// [theta_max - 1, theta_max - N^(1-alpha)]. After `iters` steps the
/// bracket has width (mu_max - mu_min) / 2^iters. Output is normalized
/// to sum to 1; no support snapping is applied here.
Distribution normmax_bisect(const Eigen::Ref<const Eigen::VectorXd>& theta,
                            double alpha, int iters = 60);

/// L(theta; y) = Omega(y) + Omega*(theta) - theta^T y >= 0, zero iff
/// y is the transform of theta. Omega* is evaluated through the
/// maximizer, so one code path serves all families.
double fy_loss(const EntropyKind& kind,
               const Eigen::Ref<const Eigen::VectorXd>& theta,
               const Eigen::Ref<const Eigen::VectorXd>& y);

/// Gradient of fy_loss in theta: transform(theta) - y.
Eigen::VectorXd fy_loss_grad(const EntropyKind& kind,
                             const Eigen::Ref<const Eigen::VectorXd>& theta,
                             const Eigen::Ref<const Eigen::VectorXd>& y);

/// Margin constant: 1/(alpha-1) for Tsallis alpha > 1, 1 for the norm
/// family, none for softmax.
MarginSpec margin_of(const EntropyKind& kind);

}  // namespace hfy

#endif
