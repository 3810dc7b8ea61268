#pragma once

#include <Eigen/Dense>

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>

namespace ndmc {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Index = Eigen::Index;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Precondition on arguments was violated (dimension mismatch, non-positive
/// scale, unknown identifier).
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// An iterative routine (SVD, quadrature) failed to converge.
class NumericalFailure : public std::runtime_error {
 public:
  NumericalFailure(const std::string& what, long iterations)
      : std::runtime_error(what), iterations_(iterations) {}
  long iterations() const noexcept { return iterations_; }

 private:
  long iterations_;
};

/// Potential is not finite at the queried point.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// The model lacks the structure an operation needs (no split, no factors,
/// no Gaussian component).
class UnsupportedOperation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A chain left the finite region; carries the offending state.
class Diverged : public std::runtime_error {
 public:
  Diverged(const std::string& what, Vec state)
      : std::runtime_error(what), state_(std::move(state)) {}
  const Vec& state() const noexcept { return state_; }

 private:
  Vec state_;
};

/// True event rate exceeded the thinning bound.
class BoundViolation : public std::runtime_error {
 public:
  BoundViolation(const std::string& what, long coordinate, double time)
      : std::runtime_error(what), coordinate_(coordinate), time_(time) {}
  long coordinate() const noexcept { return coordinate_; }
  double time() const noexcept { return time_; }

 private:
  long coordinate_;
  double time_;
};

/// Factor decomposition does not reproduce the potential.
class ValidationFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InsufficientData : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Internal invariant broken (e.g. reflecting off a zero gradient).
class InvariantViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

/// A configured storage cap (event count, sample count) was exceeded.
class ResourceLimit : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline double sgn(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

inline void require(bool cond, const char* what) {
  if (!cond) throw InvalidArgument(what);
}

}  // namespace ndmc
