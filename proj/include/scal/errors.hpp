#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace scal {

using Vector = std::vector<double>;

/// Bad shapes, out-of-range values, malformed models.
class InvalidArgument : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// A documented precondition of an operation does not hold (e.g. the
/// modified-MDP side conditions).
class PreconditionError : public std::invalid_argument {
  public:
    using std::invalid_argument::invalid_argument;
};

/// Enumeration would exceed its configured cap.
class TooLarge : public std::length_error {
  public:
    using std::length_error::length_error;
};

/// Linear algebra or iteration produced an unusable answer.
class NumericalFailure : public std::runtime_error {
  public:
    NumericalFailure(const std::string& what, double residual = 0.0)
        : std::runtime_error(what), residual_(residual) {}
    double residual() const { return residual_; }

  private:
    double residual_;
};

/// An iterative solver hit its iteration cap.
///
/// `iterates` holds the tail of the sequence (oldest first). `period2_residual`
/// is span(v_{n+2} - v_n) over the last three iterates; it is ~0 when the
/// sequence is cycling with period 2 rather than converging slowly.
class NonConvergence : public std::runtime_error {
  public:
    NonConvergence(const std::string& what, std::size_t iterations, double residual,
                   double period2_residual, std::vector<Vector> iterates)
        : std::runtime_error(what),
          iterations(iterations),
          residual(residual),
          period2_residual(period2_residual),
          iterates(std::move(iterates)) {}

    bool period_two() const { return period2_residual <= 1e-9 && residual > 1e-9; }

    std::size_t iterations;
    double residual;
    double period2_residual;
    std::vector<Vector> iterates;
};

}  // namespace scal
