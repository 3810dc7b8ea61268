#pragma once

// Moreau-Yosida envelope g^lambda(x) = min_u g(u) + ||x - u||^2/(2 lambda)
// evaluated through a precomputed proximal point.

#include <ndmc/prox.hpp>

#include <functional>

namespace ndmc {

struct MyeGradient {
  Vec grad;
  double lipschitz_bound = 0.0;  // 1 / lambda
};

/// g(p) + ||x - p||^2/(2 lambda), with p = prox.point computed at (x, lambda).
inline double mye_value(const std::function<double(const Vec&)>& g_at, const ProxResult& prox,
                        const Vec& x, double lambda) {
  require(lambda > 0.0, "mye_value: lambda must be positive");
  if (prox.point.size() != x.size()) throw InvalidArgument("mye_value: dimension mismatch");
  return g_at(prox.point) + (x - prox.point).squaredNorm() / (2.0 * lambda);
}

inline MyeGradient mye_gradient(const Vec& x, double lambda, const ProxResult& prox) {
  require(lambda > 0.0, "mye_gradient: lambda must be positive");
  if (prox.point.size() != x.size()) throw InvalidArgument("mye_gradient: dimension mismatch");
  return {(x - prox.point) / lambda, 1.0 / lambda};
}

struct MyeErrorBound {
  double sup_gap = 0.0;             // sup_x g(x) - g^lambda(x) <= L^2 lambda / 2
  double expectation_factor = 0.0;  // |E_{pi^lambda} f - E_pi f| <= factor * E|f|
};

/// Bounds for an L-Lipschitz convex g. The expectation factor is the looser
/// exp(L^2 lambda) - 1, which holds against either reference measure.
inline MyeErrorBound mye_error_bound(double lipschitz, double lambda) {
  require(lipschitz >= 0.0, "mye_error_bound: L must be nonnegative");
  require(lambda > 0.0, "mye_error_bound: lambda must be positive");
  const double l2 = lipschitz * lipschitz * lambda;
  return {0.5 * l2, std::expm1(l2)};
}

}  // namespace ndmc
