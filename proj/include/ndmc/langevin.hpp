#pragma once

// Discretized Langevin samplers on the Moreau-Yosida smoothed target:
// overdamped (MY-ULA), underdamped second-order (MY-UULA), and the
// Metropolis-adjusted proximal variant (pMALA).

#include <ndmc/chain.hpp>
#include <ndmc/model.hpp>

#include <chrono>
#include <functional>
#include <random>

namespace ndmc {

using Rng = std::mt19937_64;

inline constexpr double kDivergenceThreshold = 1e12;

/// grad U_lambda for split models; the plain gradient for smooth models.
inline Vec drift_gradient(const TargetModel& model, const Vec& x, double lambda, ProxWorkspace* ws = nullptr) {
  Vec g;
  if (model.split() != nullptr) {
    g = smoothed_grad(model, x, lambda, ws);
  } else {
    model.gradient(x, g);
  }
  if (!g.allFinite()) throw Diverged("non-finite gradient", x);
  return g;
}

inline Vec standard_normal(Index n, Rng& rng) {
  std::normal_distribution<double> normal;
  Vec z(n);
  for (Index i = 0; i < n; ++i) z[i] = normal(rng);
  return z;
}

// ---------------------------------------------------------------------------
// MY-ULA

struct UlaConfig {
  double delta = 0.0;
  double lambda = 0.0;

  void validate() const { require(delta > 0.0 && lambda > 0.0, "UlaConfig: delta and lambda must be positive"); }
};

/// x - delta * grad + sqrt(2 delta) * xi for a given noise draw xi.
inline Vec ula_update(const Vec& x, const Vec& grad, double delta, const Vec& xi) {
  return x - delta * grad + std::sqrt(2.0 * delta) * xi;
}

inline Vec my_ula_step(const Vec& x, const UlaConfig& cfg, const TargetModel& model, Rng& rng,
                       ProxWorkspace* ws = nullptr) {
  const Vec g = drift_gradient(model, x, cfg.lambda, ws);
  return ula_update(x, g, cfg.delta, standard_normal(x.size(), rng));
}

// ---------------------------------------------------------------------------
// MY-UULA

/// Per-coordinate 2x2 noise covariance of the underdamped update.
struct UulaCovariance {
  double xx = 0.0, xv = 0.0, vv = 0.0;
  double l11 = 0.0, l21 = 0.0, l22 = 0.0;  // lower Cholesky factor
};

struct UulaConfig {
  double nu = 0.0;      // step size
  double gamma = 2.0;   // friction
  double xi = 1.0;
  double lambda = 1.0;

  double beta() const { return std::exp(-gamma * xi * nu); }

  /// Throws InvalidArgument unless all parameters are positive and the noise
  /// covariance is positive semidefinite.
  UulaCovariance covariance() const {
    require(nu > 0.0 && gamma > 0.0 && xi > 0.0 && lambda > 0.0, "UulaConfig: parameters must be positive");
    const long double a = static_cast<long double>(gamma) * xi * nu;
    const long double b = std::exp(-a);
    const long double one_minus_b = -std::expm1(-a);
    const long double gx = static_cast<long double>(gamma) * xi;
    // 2a - (1 - b)(3 - b) loses all digits to cancellation for small a
    long double f;
    if (a < 1e-3L) {
      f = a * a * a * (2.0L / 3 - a / 2 + 7.0L * a * a / 30 - a * a * a / 12);
    } else {
      f = 2.0L * a - one_minus_b * (3.0L - b);
    }
    UulaCovariance c;
    c.xx = static_cast<double>(f / (gamma * gx));
    c.xv = static_cast<double>(one_minus_b * one_minus_b / gx);
    c.vv = static_cast<double>(one_minus_b * (1.0L + b) / xi);
    if (!(c.xx >= 0.0 && c.vv >= 0.0 && c.xx * c.vv - c.xv * c.xv >= -1e-15 * c.xx * c.vv))
      throw InvalidArgument("UulaConfig: noise covariance is not positive semidefinite");
    c.l11 = std::sqrt(c.xx);
    c.l21 = c.l11 > 0.0 ? c.xv / c.l11 : 0.0;
    c.l22 = std::sqrt(std::max(c.vv - c.l21 * c.l21, 0.0));
    return c;
  }
};

/// Defaults tied to the envelope tightness: gamma = 2, nu = 2 lambda and
/// xi = 1/lambda, the Lipschitz constant of the smoothed gradient.
inline UulaConfig uula_defaults(double lambda) {
  require(lambda > 0.0, "uula_defaults: lambda must be positive");
  return UulaConfig{2.0 * lambda, 2.0, 1.0 / lambda, lambda};
}

/// Deterministic part of the update plus a supplied noise pair.
inline void uula_update(Vec& x, Vec& v, const Vec& grad, const UulaConfig& cfg, const Vec& wx, const Vec& wv) {
  const double b = cfg.beta();
  const double omb = -std::expm1(-cfg.gamma * cfg.xi * cfg.nu);
  const double gx = cfg.gamma * cfg.xi;
  const Vec x_new = x + (omb / cfg.gamma) * v - (1.0 / cfg.gamma) * (cfg.nu - omb / gx) * grad + wx;
  v = b * v - (omb / gx) * grad + wv;
  x = x_new;
}

/// Draws (W_x, W_v) with the per-coordinate covariance through its Cholesky
/// factor.
inline void uula_noise(const UulaCovariance& c, Index n, Rng& rng, Vec& wx, Vec& wv) {
  const Vec z1 = standard_normal(n, rng), z2 = standard_normal(n, rng);
  wx = c.l11 * z1;
  wv = c.l21 * z1 + c.l22 * z2;
}

inline void my_uula_step(Vec& x, Vec& v, const UulaConfig& cfg, const UulaCovariance& cov,
                         const TargetModel& model, Rng& rng, ProxWorkspace* ws = nullptr) {
  if (v.size() != x.size()) throw InvalidArgument("my_uula_step: velocity dimension mismatch");
  const Vec g = drift_gradient(model, x, cfg.lambda, ws);
  Vec wx, wv;
  uula_noise(cov, x.size(), rng, wx, wv);
  uula_update(x, v, g, cfg, wx, wv);
}

// ---------------------------------------------------------------------------
// pMALA

/// log q(to | from) up to a constant for the proposal N(from - (delta/2) g, delta I).
inline double pmala_log_q(const Vec& to, const Vec& from, const Vec& grad_from, double delta) {
  return -(to - from + 0.5 * delta * grad_from).squaredNorm() / (2.0 * delta);
}

/// One Metropolis-adjusted step. Drift uses the smoothed gradient with
/// tightness `lambda`; acceptance uses the exact potential. Returns whether
/// the proposal was accepted; `x` is updated in place.
inline bool pmala_step(Vec& x, double delta, double lambda, const TargetModel& model, Rng& rng,
                       ProxWorkspace* ws = nullptr) {
  require(delta > 0.0, "pmala_step: delta must be positive");
  const Vec gx = drift_gradient(model, x, lambda, ws);
  const Vec prop = x - 0.5 * delta * gx + std::sqrt(delta) * standard_normal(x.size(), rng);
  std::uniform_real_distribution<double> unif;
  const double log_u = std::log(unif(rng));
  const double u_prop = model.potential(prop);
  if (!std::isfinite(u_prop)) return false;
  const Vec gp = drift_gradient(model, prop, lambda, ws);
  const double log_ratio = (model.potential(x) - u_prop) + pmala_log_q(x, prop, gp, delta) -
                           pmala_log_q(prop, x, gx, delta);
  if (log_u < log_ratio) {
    x = prop;
    return true;
  }
  return false;
}

struct PmalaTuning {
  double delta = 0.0;
  double acceptance = 0.0;  // over the second half of the adaptation run
};

/// Robbins-Monro adaptation of log(delta) toward a target acceptance rate.
/// Runs `n_adapt` steps from `x`, leaving `x` at the final state.
inline PmalaTuning tune_pmala(Vec& x, double delta0, double lambda, const TargetModel& model, Rng& rng,
                              long n_adapt, double target = 0.55, ProxWorkspace* ws = nullptr) {
  require(delta0 > 0.0 && n_adapt > 0, "tune_pmala: need delta0 > 0 and n_adapt > 0");
  require(target > 0.0 && target < 1.0, "tune_pmala: target must lie in (0, 1)");
  double log_delta = std::log(delta0);
  long acc = 0, counted = 0;
  for (long k = 0; k < n_adapt; ++k) {
    const bool a = pmala_step(x, std::exp(log_delta), lambda, model, rng, ws);
    log_delta += ((a ? 1.0 : 0.0) - target) / std::pow(static_cast<double>(k) + 10.0, 0.6);
    if (2 * k >= n_adapt) {
      acc += a;
      ++counted;
    }
  }
  return {std::exp(log_delta), counted > 0 ? static_cast<double>(acc) / static_cast<double>(counted) : 0.0};
}

// ---------------------------------------------------------------------------
// Chain driver

/// Advances (x, v) by one step and reports acceptance (always true for
/// unadjusted schemes).
using Stepper = std::function<bool(Vec& x, Vec& v, Rng& rng)>;

struct ChainOptions {
  long n_steps = 0;
  long burn_in = 0;
  long thin = 1;
  double time_budget = kInf;  // seconds; stops at the next step boundary
  bool record_acceptance = false;
};

/// Runs a stepper and keeps every `thin`-th state after burn-in. A step that
/// leaves the finite region (|x_i| > 1e12) or throws Diverged stops the run;
/// the partial chain is returned with `diverged` set.
inline SampleChain run_chain(const Stepper& step, Vec x, Vec v, const ChainOptions& opt, Rng& rng) {
  require(opt.n_steps >= opt.burn_in && opt.burn_in >= 0, "run_chain: need n_steps >= burn_in >= 0");
  require(opt.thin >= 1, "run_chain: thin must be at least 1");
  SampleChain chain(x.size());
  const std::size_t expected = static_cast<std::size_t>((opt.n_steps - opt.burn_in + opt.thin - 1) / opt.thin);
  chain.data.reserve(expected * static_cast<std::size_t>(x.size()));
  const auto start = std::chrono::steady_clock::now();
  for (long k = 0; k < opt.n_steps; ++k) {
    bool acc = true;
    try {
      acc = step(x, v, rng);
    } catch (const Diverged& e) {
      chain.diverged = true;
      chain.diagnostic = std::string(e.what()) + " at step " + std::to_string(k);
      break;
    }
    if (!x.allFinite() || x.cwiseAbs().maxCoeff() > kDivergenceThreshold) {
      chain.diverged = true;
      chain.diagnostic = "state left the finite region at step " + std::to_string(k);
      break;
    }
    if (k >= opt.burn_in && (k - opt.burn_in) % opt.thin == 0) {
      chain.push(x);
      if (opt.record_acceptance) chain.accepted.push_back(acc ? 1 : 0);
    }
    if (opt.time_budget < kInf && (k & 255) == 255) {
      const std::chrono::duration<double> el = std::chrono::steady_clock::now() - start;
      if (el.count() >= opt.time_budget) break;
    }
  }
  const std::chrono::duration<double> el = std::chrono::steady_clock::now() - start;
  chain.wall_time = el.count();
  return chain;
}

}  // namespace ndmc
