#pragma once

#include <ndmc/model.hpp>

namespace ndmc {

/// Density of the wrapped asymmetric Laplace distribution on [0, 2 pi) at the
/// shifted angle theta in (0, 2 pi], with its partial derivatives.
struct WrappedLaplace {
  double value = 0.0;
  double d_theta = 0.0;
  double d_lambda = 0.0;
  double d_kappa = 0.0;

  static double shift(double y, double mu) {
    const double d = y - mu;
    return d > 0.0 ? d : d + 2.0 * std::numbers::pi;
  }

  static WrappedLaplace eval(double theta, double lambda, double kappa) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    const double a = lambda * kappa, b = lambda / kappa;
    const double c = a / (1.0 + kappa * kappa);
    // A = e^{-a theta} / (1 - e^{-2 pi a}),  B = e^{b (theta - 2 pi)} / (1 - e^{-2 pi b})
    const double A = std::exp(-a * theta) / -std::expm1(-two_pi * a);
    const double B = std::exp(b * (theta - two_pi)) / -std::expm1(-two_pi * b);
    const double dlogA_da = -theta - two_pi / std::expm1(two_pi * a);
    const double dlogB_db = (theta - two_pi) - two_pi / std::expm1(two_pi * b);
    WrappedLaplace w;
    w.value = c * (A + B);
    w.d_theta = c * (-a * A + b * B);
    // dc/dlambda = c / lambda, da/dlambda = kappa, db/dlambda = 1/kappa
    w.d_lambda = w.value / lambda + c * (A * dlogA_da * kappa + B * dlogB_db / kappa);
    // dlog c/dkappa = 1/kappa - 2 kappa/(1+kappa^2), da/dkappa = lambda, db/dkappa = -lambda/kappa^2
    const double dlogc = 1.0 / kappa - 2.0 * kappa / (1.0 + kappa * kappa);
    w.d_kappa = w.value * dlogc + c * (A * dlogA_da * lambda - B * dlogB_db * lambda / (kappa * kappa));
    return w;
  }
};

/// Two-component mixture of wrapped Laplace distributions on angles.
/// Parameters: (mu1, mu2, lambda1, lambda2, kappa1, kappa2, rho).
/// Priors: uniform mu, Exp(1) lambda, Gamma(shape 2, scale 1/2) kappa,
/// Beta(100, 100) rho.
class WrappedLaplaceMixture final : public TargetModel {
 public:
  static constexpr Index kMu1 = 0, kMu2 = 1, kLam1 = 2, kLam2 = 3, kKap1 = 4, kKap2 = 5, kRho = 6;

  explicit WrappedLaplaceMixture(std::vector<double> data) : data_(std::move(data)) {
    require(!data_.empty(), "WrappedLaplaceMixture: no data");
    for (double y : data_)
      if (!(y >= 0.0 && y < 2.0 * std::numbers::pi)) throw InvalidArgument("WrappedLaplaceMixture: angle outside [0, 2pi)");
    domain_.periodic = {kMu1, kMu2};
    domain_.lower = Vec::Constant(7, -kInf);
    domain_.upper = Vec::Constant(7, kInf);
    for (Index i = kLam1; i <= kRho; ++i) domain_.lower[i] = 0.0;
    domain_.upper[kRho] = 1.0;
  }

  std::string name() const override { return "wrapped_mixture"; }
  Index dim() const override { return 7; }
  const std::vector<double>& data() const { return data_; }

  bool in_support(const Vec& x) const {
    return x[kLam1] > 0.0 && x[kLam2] > 0.0 && x[kKap1] > 0.0 && x[kKap2] > 0.0 && x[kRho] > 0.0 && x[kRho] < 1.0;
  }

  double potential(const Vec& x) const override {
    if (!in_support(x)) return kInf;
    const double rho = x[kRho];
    double u = x[kLam1] + x[kLam2];                                              // Exp(1)
    u += -std::log(x[kKap1]) + 2.0 * x[kKap1] - std::log(x[kKap2]) + 2.0 * x[kKap2];  // Gamma(2, 1/2)
    u += -99.0 * (std::log(rho) + std::log1p(-rho));                             // Beta(100, 100)
    for (double y : data_) {
      const double l1 = WrappedLaplace::eval(WrappedLaplace::shift(y, wrap(x[kMu1])), x[kLam1], x[kKap1]).value;
      const double l2 = WrappedLaplace::eval(WrappedLaplace::shift(y, wrap(x[kMu2])), x[kLam2], x[kKap2]).value;
      u -= std::log(rho * l1 + (1.0 - rho) * l2);
    }
    return u;
  }

  /// The density has a kink in mu_k wherever mu_k equals an observation.
  bool nondifferentiable(Index i, const Vec& x) const override {
    if (i != kMu1 && i != kMu2) return false;
    const double mu = wrap(x[i]);
    for (double y : data_)
      if (y == mu) return true;
    return false;
  }

  double partial(Index i, const Vec& x) const override {
    Vec g;
    gradient(x, g);
    return g[i];
  }

  void gradient(const Vec& x, Vec& g) const override {
    g = Vec::Zero(7);
    if (!in_support(x)) throw DomainError("WrappedLaplaceMixture: gradient outside the support");
    const double rho = x[kRho];
    g[kLam1] = 1.0;
    g[kLam2] = 1.0;
    g[kKap1] = -1.0 / x[kKap1] + 2.0;
    g[kKap2] = -1.0 / x[kKap2] + 2.0;
    g[kRho] = -99.0 / rho + 99.0 / (1.0 - rho);
    for (double y : data_) {
      const auto w1 = WrappedLaplace::eval(WrappedLaplace::shift(y, wrap(x[kMu1])), x[kLam1], x[kKap1]);
      const auto w2 = WrappedLaplace::eval(WrappedLaplace::shift(y, wrap(x[kMu2])), x[kLam2], x[kKap2]);
      const double mix = rho * w1.value + (1.0 - rho) * w2.value;
      // dtheta/dmu = -1
      g[kMu1] += rho * w1.d_theta / mix;
      g[kMu2] += (1.0 - rho) * w2.d_theta / mix;
      g[kLam1] -= rho * w1.d_lambda / mix;
      g[kLam2] -= (1.0 - rho) * w2.d_lambda / mix;
      g[kKap1] -= rho * w1.d_kappa / mix;
      g[kKap2] -= (1.0 - rho) * w2.d_kappa / mix;
      g[kRho] -= (w1.value - w2.value) / mix;
    }
    for (Index i : {kMu1, kMu2})
      if (nondifferentiable(i, x)) g[i] = 0.0;
  }

  const Domain* domain() const override { return &domain_; }

  std::vector<ClockRule> zz_clocks() const override { return std::vector<ClockRule>(7, NumericClock{0.1, 1e-10}); }
  std::optional<ClockRule> bps_clock() const override { return ClockRule{NumericClock{0.1, 1e-10}}; }

  static double wrap(double mu) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double m = std::fmod(mu, two_pi);
    if (m < 0.0) m += two_pi;
    return m;
  }

 private:
  std::vector<double> data_;
  Domain domain_;
};

/// Angles from two wrapped Laplace clusters centred at `c1` and `c2`,
/// `per_cluster` points each.
inline std::vector<double> make_two_cluster_angles(double c1, double c2, int per_cluster, double spread,
                                                   std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::exponential_distribution<double> ex(1.0 / spread);
  std::bernoulli_distribution coin(0.5);
  std::vector<double> out;
  for (double c : {c1, c2})
    for (int k = 0; k < per_cluster; ++k) {
      const double d = ex(rng) * (coin(rng) ? 1.0 : -1.0);
      out.push_back(WrappedLaplaceMixture::wrap(c + d));
    }
  return out;
}

inline ModelPtr build_wrapped_mixture(const std::vector<double>& data) {
  return std::make_shared<WrappedLaplaceMixture>(data);
}

}  // namespace ndmc
