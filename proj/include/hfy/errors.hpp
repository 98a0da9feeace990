#ifndef HFY_ERRORS_HPP
#define HFY_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace hfy {

/// Iterative solver ran out of iterations; carries the last residual
/// (improving-direction gain) for diagnostics.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double residual)
        : std::runtime_error(what + " (residual " + std::to_string(residual) + ")"),
          residual_(residual) {}

    double residual() const { return residual_; }

private:
    double residual_;
};

/// Rejection sampling exhausted its attempt budget.
class GenerationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace hfy

#endif
