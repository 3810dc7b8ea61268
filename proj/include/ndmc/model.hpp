#pragma once

// Posterior targets pi(x) ~ exp(-U(x)) whose potential is differentiable only
// almost everywhere. Undefined partial derivatives evaluate to zero: each
// model declares its own kink predicate and returns 0 there.

#include <ndmc/prox.hpp>
#include <ndmc/rates.hpp>

#include <memory>
#include <numbers>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace ndmc {

/// U = smooth(x) + g(x) with g convex and equipped with a proximal map.
struct SmoothSplit {
  std::function<double(const Vec&)> smooth_potential;
  std::function<void(const Vec&, Vec&)> smooth_gradient;
  std::function<double(const Vec&)> nonsmooth_potential;
  ProxSpec prox;
};

/// One additive term U_f of the potential, acting on a subset of coordinates.
/// Callables receive the restricted vector x[coords].
struct Factor {
  std::vector<Index> coords;
  std::function<double(const Vec&)> potential;
  std::function<void(const Vec&, Vec&)> gradient;
  std::optional<BoundStrategy> rate_bound;
  std::function<RateFamily(const Vec&, const Vec&)> exact_rate;
};

/// Diagonal Gaussian part V(x) = sum_i (x_i - mean_i)^2 / (2 var_i) of U,
/// used as the Hamiltonian flow of the Hamiltonian BPS.
struct GaussianComponent {
  Vec mean;
  Vec variances;
  /// Gradient of U - V (or of its smoothed version) used by the bounces.
  std::function<void(const Vec&, Vec&)> remainder_gradient;
  /// Upper bound on the norm of remainder_gradient.
  double remainder_gradient_bound = kInf;
};

/// Periodic coordinates are wrapped onto [0, period); lower/upper bounds are
/// reflecting walls for the other coordinates.
struct Domain {
  std::vector<Index> periodic;
  double period = 2.0 * std::numbers::pi;
  Vec lower;
  Vec upper;

  bool is_periodic(Index i) const {
    for (Index p : periodic)
      if (p == i) return true;
    return false;
  }
};

class TargetModel {
 public:
  virtual ~TargetModel() = default;

  virtual std::string name() const = 0;
  virtual Index dim() const = 0;
  /// U(x) = -log pi(x) up to an additive constant.
  virtual double potential(const Vec& x) const = 0;
  /// dU/dx_i, 0 where undefined.
  virtual double partial(Index i, const Vec& x) const = 0;
  /// Full gradient under the same convention.
  virtual void gradient(const Vec& x, Vec& g) const {
    g.resize(dim());
    for (Index i = 0; i < dim(); ++i) g[i] = partial(i, x);
  }
  /// Declared kink predicate: true when dU/dx_i does not exist at x.
  virtual bool nondifferentiable(Index /*i*/, const Vec& /*x*/) const { return false; }

  virtual const SmoothSplit* split() const { return nullptr; }
  virtual const std::vector<Factor>* factors() const { return nullptr; }
  virtual const GaussianComponent* gaussian_component() const { return nullptr; }
  virtual const Domain* domain() const { return nullptr; }

  /// Per-coordinate Zig-Zag clocks; empty when the model has no default.
  virtual std::vector<ClockRule> zz_clocks() const { return {}; }
  /// Global BPS clock; nullopt when the model has no default.
  virtual std::optional<ClockRule> bps_clock() const { return std::nullopt; }
};

using ModelPtr = std::shared_ptr<const TargetModel>;

inline Vec grad_with_convention(const TargetModel& model, const Vec& x) {
  if (x.size() != model.dim()) throw InvalidArgument("grad_with_convention: dimension mismatch");
  if (!std::isfinite(model.potential(x))) throw DomainError("grad_with_convention: potential not finite");
  Vec g;
  model.gradient(x, g);
  return g;
}

/// Carries the TV dual field between consecutive prox evaluations.
struct ProxWorkspace {
  Vec warm_dual;
  int last_iterations = 0;
  bool last_converged = true;
};

/// grad U_lambda(x) = grad(smooth)(x) + (x - prox(x)) / lambda.
inline Vec smoothed_grad(const TargetModel& model, const Vec& x, double lambda,
                         ProxWorkspace* ws = nullptr) {
  const SmoothSplit* sp = model.split();
  if (sp == nullptr) throw UnsupportedOperation("smoothed_grad: model '" + model.name() + "' has no split");
  require(lambda > 0.0, "smoothed_grad: lambda must be positive");
  if (x.size() != model.dim()) throw InvalidArgument("smoothed_grad: dimension mismatch");
  const Vec* warm = (ws != nullptr && ws->warm_dual.size() > 0) ? &ws->warm_dual : nullptr;
  ProxResult pr = apply_prox(sp->prox, x, lambda, warm);
  if (ws != nullptr) {
    ws->warm_dual = std::move(pr.dual);
    ws->last_iterations = pr.iterations;
    ws->last_converged = pr.converged;
  }
  Vec g;
  if (sp->smooth_gradient) {
    sp->smooth_gradient(x, g);
  } else {
    g = Vec::Zero(x.size());
  }
  g += (x - pr.point) / lambda;
  return g;
}

/// U_lambda(x) = smooth(x) + g^lambda(x).
inline double smoothed_potential(const TargetModel& model, const Vec& x, double lambda) {
  const SmoothSplit* sp = model.split();
  if (sp == nullptr) throw UnsupportedOperation("smoothed_potential: no split");
  const ProxResult pr = apply_prox(sp->prox, x, lambda);
  const double smooth = sp->smooth_potential ? sp->smooth_potential(x) : 0.0;
  return smooth + sp->nonsmooth_potential(pr.point) + (x - pr.point).squaredNorm() / (2.0 * lambda);
}

inline Vec restrict_to(const Vec& x, const std::vector<Index>& coords) {
  Vec out(static_cast<Index>(coords.size()));
  for (std::size_t k = 0; k < coords.size(); ++k) out[static_cast<Index>(k)] = x[coords[k]];
  return out;
}

struct FactorReport {
  double max_residual = 0.0;
  double constant = 0.0;
  Vec worst_point;
  std::size_t worst_index = 0;
  std::size_t points_checked = 0;
};

/// Checks coverage of all coordinates and that the factor potentials add up
/// to U up to one additive constant at `n_points` random states x = center +
/// scale * N(0, I). Throws ValidationFailure on either failure.
inline FactorReport validate_factors(const TargetModel& model, std::size_t n_points, double tol,
                                     std::uint64_t seed = 1, const Vec* center = nullptr,
                                     double scale = 1.0) {
  const auto* fs = model.factors();
  if (fs == nullptr) throw UnsupportedOperation("validate_factors: model has no factors");
  const Index n = model.dim();
  std::vector<bool> covered(static_cast<std::size_t>(n), false);
  for (const Factor& f : *fs) {
    for (Index c : f.coords) {
      if (c < 0 || c >= n) throw ValidationFailure("validate_factors: factor coordinate out of range");
      covered[static_cast<std::size_t>(c)] = true;
    }
  }
  for (Index i = 0; i < n; ++i)
    if (!covered[static_cast<std::size_t>(i)])
      throw ValidationFailure("validate_factors: coordinate " + std::to_string(i) + " not covered by any factor");

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  FactorReport rep;
  for (std::size_t k = 0; k < n_points; ++k) {
    Vec x(n);
    for (Index i = 0; i < n; ++i) x[i] = scale * normal(rng);
    if (center != nullptr) x += *center;
    double total = 0.0;
    for (const Factor& f : *fs) total += f.potential(restrict_to(x, f.coords));
    const double diff = total - model.potential(x);
    if (k == 0) {
      rep.constant = diff;
      rep.worst_point = x;
    }
    const double res = std::abs(diff - rep.constant);
    if (res > rep.max_residual) {
      rep.max_residual = res;
      rep.worst_point = x;
      rep.worst_index = k;
    }
    ++rep.points_checked;
  }
  if (rep.max_residual > tol)
    throw ValidationFailure("validate_factors: reconstruction residual " + std::to_string(rep.max_residual) +
                            " at random point #" + std::to_string(rep.worst_index) + " exceeds tolerance");
  return rep;
}

}  // namespace ndmc
