#pragma once

// Modified Bessel function of the second kind for real order, in log space.

#include <ndmc/core.hpp>

#include <boost/math/special_functions/bessel.hpp>

namespace ndmc::bessel {

/// Switch to the large-argument expansion beyond this point, where K_nu
/// underflows in double precision.
inline constexpr double kAsymptoticFrom = 600.0;

/// log K_nu(z) from the Hankel expansion
/// K_nu(z) ~ sqrt(pi/(2z)) e^{-z} (1 + (mu-1)/(8z) + (mu-1)(mu-9)/(2!(8z)^2) + ...), mu = 4 nu^2.
inline double log_k_asymptotic(double nu, double z) {
  const double mu = 4.0 * nu * nu;
  double term = 1.0, sum = 1.0;
  for (int k = 1; k <= 12; ++k) {
    const double odd = 2.0 * k - 1.0;
    term *= (mu - odd * odd) / (k * 8.0 * z);
    sum += term;
    if (std::abs(term) < 1e-17 * std::abs(sum)) break;
  }
  return 0.5 * std::log(M_PI / (2.0 * z)) - z + std::log(sum);
}

inline double log_k(double nu, double z) {
  if (!(z > 0.0)) throw DomainError("bessel::log_k: argument must be positive");
  if (z >= kAsymptoticFrom) return log_k_asymptotic(nu, z);
  const double k = boost::math::cyl_bessel_k(nu, z);
  if (!std::isfinite(k) || k <= 0.0) throw NumericalFailure("bessel::log_k: evaluation failed", 0);
  return std::log(k);
}

/// K_{nu+d}(z) / K_nu(z), evaluated as a difference of logs.
inline double ratio(double nu, double d, double z) {
  const double r = std::exp(log_k(nu + d, z) - log_k(nu, z));
  if (std::isnan(r)) throw NumericalFailure("bessel::ratio: NaN", 0);
  return r;
}

}  // namespace ndmc::bessel
