#pragma once

#include <ndmc/model.hpp>

namespace ndmc {

/// pi(x) ~ exp(-beta^T |x|).
class AnisotropicLaplace final : public TargetModel {
 public:
  explicit AnisotropicLaplace(Vec beta) : beta_(std::move(beta)) {
    if (beta_.size() == 0 || !(beta_.array() > 0.0).all())
      throw InvalidArgument("AnisotropicLaplace: beta must be strictly positive");
    const Vec b = beta_;
    split_.nonsmooth_potential = [b](const Vec& x) { return b.dot(x.cwiseAbs()); };
    split_.prox.kind = ProxKind::L1Weighted;
    split_.prox.weights = b;
    for (Index i = 0; i < dim(); ++i) {
      const double bi = beta_[i];
      Factor f;
      f.coords = {i};
      f.potential = [bi](const Vec& x) { return bi * std::abs(x[0]); };
      f.gradient = [bi](const Vec& x, Vec& g) { g = Vec::Constant(1, bi * sgn(x[0])); };
      f.exact_rate = [bi](const Vec& x, const Vec& v) { return rate(bi, x[0], v[0]); };
      factors_.push_back(std::move(f));
    }
  }

  /// Rate of max{0, v beta sgn(x + v t)} as a function of t.
  static RateFamily rate(double beta, double x, double v) {
    if (v == 0.0) return PiecewiseConstantRate{0.0, 0.0};
    const double until = (x * v < 0.0) ? std::abs(x) / std::abs(v) : 0.0;
    return PiecewiseConstantRate{until, beta * std::abs(v)};
  }

  std::string name() const override { return "laplace"; }
  Index dim() const override { return beta_.size(); }
  const Vec& beta() const { return beta_; }

  double potential(const Vec& x) const override { return beta_.dot(x.cwiseAbs()); }
  bool nondifferentiable(Index i, const Vec& x) const override { return x[i] == 0.0; }
  double partial(Index i, const Vec& x) const override { return beta_[i] * sgn(x[i]); }
  void gradient(const Vec& x, Vec& g) const override { g = beta_.cwiseProduct(x.unaryExpr(&sgn)); }

  const SmoothSplit* split() const override { return &split_; }
  const std::vector<Factor>* factors() const override { return &factors_; }

  std::vector<ClockRule> zz_clocks() const override {
    std::vector<ClockRule> out;
    for (Index i = 0; i < dim(); ++i) {
      const double bi = beta_[i];
      out.emplace_back(ExactClock{[bi, i](const Vec& x, const Vec& v) { return rate(bi, x[i], v[i]); }});
    }
    return out;
  }

  /// Constant bound sum_i beta_i |v_i| >= <v, beta sgn(x)>.
  std::optional<ClockRule> bps_clock() const override {
    BoundStrategy b;
    b.kind = BoundKind::Constant;
    const Vec beta = beta_;
    b.payload = [beta](const Vec&, const Vec& v, double) { return LinearBound{beta.dot(v.cwiseAbs()), 0.0}; };
    b.lookahead_theta = 1.0;
    return b;
  }

  double cdf(Index i, double x) const {
    const double b = beta_[i];
    return x < 0.0 ? 0.5 * std::exp(b * x) : 1.0 - 0.5 * std::exp(-b * x);
  }

 private:
  Vec beta_;
  SmoothSplit split_;
  std::vector<Factor> factors_;
};

inline ModelPtr build_laplace(const Vec& beta) { return std::make_shared<AnisotropicLaplace>(beta); }

}  // namespace ndmc
