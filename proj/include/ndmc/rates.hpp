#pragma once

// Descriptions of event-rate functions t -> rho(t) along a deterministic
// flow, as consumed by the PDMP event generators.

#include <ndmc/core.hpp>

#include <functional>
#include <variant>

namespace ndmc {

/// Rate 0 on [0, zero_until), `rate` afterwards.
struct PiecewiseConstantRate {
  double zero_until = 0.0;
  double rate = 0.0;
};

/// Rate max(0, a + b t).
struct LinearRate {
  double a = 0.0;
  double b = 0.0;
};

using RateFamily = std::variant<PiecewiseConstantRate, LinearRate>;

/// Dominating rate a + b (t - s) on a look-ahead window [s, s + theta].
struct LinearBound {
  double a = 0.0;
  double b = 0.0;
  double at(double u) const { return a + b * u; }
};

enum class BoundKind { Constant, LinearInT, LogConcaveEndpoint };

/// How thinning obtains its dominating rate on each look-ahead window.
///
/// Constant and LinearInT read the bound from `payload`, evaluated at the
/// state (x, v) at the start of the window. LogConcaveEndpoint takes
/// max(rho(s), rho(s + theta)) + gamma, valid when the rate is monotone on
/// the window (convex potentials).
struct BoundStrategy {
  BoundKind kind = BoundKind::Constant;
  std::function<LinearBound(const Vec& x, const Vec& v, double theta)> payload;
  double lookahead_theta = 1.0;
  /// Additive safety margin; negative selects 1e-9 times the bound.
  double safety_gamma = -1.0;
};

inline BoundStrategy constant_bound(double c, double theta = 1.0) {
  BoundStrategy b;
  b.kind = BoundKind::Constant;
  b.payload = [c](const Vec&, const Vec&, double) { return LinearBound{c, 0.0}; };
  b.lookahead_theta = theta;
  return b;
}

inline BoundStrategy endpoint_bound(double theta = 1.0) {
  BoundStrategy b;
  b.kind = BoundKind::LogConcaveEndpoint;
  b.lookahead_theta = theta;
  return b;
}

/// Closed-form event times from a state-dependent rate family.
struct ExactClock {
  std::function<RateFamily(const Vec& x, const Vec& v)> family;
};

/// Event time by numerically inverting the integrated rate with adaptive
/// Simpson quadrature over steps of length `step`.
struct NumericClock {
  double step = 0.25;
  double tol = 1e-10;
};

using ClockRule = std::variant<ExactClock, BoundStrategy, NumericClock>;

}  // namespace ndmc
