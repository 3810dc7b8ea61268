#pragma once

#include <ndmc/model.hpp>

#include <boost/math/special_functions/erf.hpp>

namespace ndmc {

/// Centered Gaussian with diagonal covariance.
class AnisotropicGaussian final : public TargetModel {
 public:
  explicit AnisotropicGaussian(Vec variances) : var_(std::move(variances)) {
    if (var_.size() == 0 || !(var_.array() > 0.0).all())
      throw InvalidArgument("AnisotropicGaussian: variances must be strictly positive");
    prec_ = var_.cwiseInverse();
    for (Index i = 0; i < dim(); ++i) {
      const double p = prec_[i];
      Factor f;
      f.coords = {i};
      f.potential = [p](const Vec& x) { return 0.5 * p * x[0] * x[0]; };
      f.gradient = [p](const Vec& x, Vec& g) { g = Vec::Constant(1, p * x[0]); };
      f.exact_rate = [p](const Vec& x, const Vec& v) { return RateFamily{LinearRate{p * v[0] * x[0], p * v[0] * v[0]}}; };
      factors_.push_back(std::move(f));
    }
    gc_.mean = Vec::Zero(dim());
    gc_.variances = var_;
    gc_.remainder_gradient = [](const Vec& x, Vec& g) { g = Vec::Zero(x.size()); };
    gc_.remainder_gradient_bound = 0.0;
  }

  std::string name() const override { return "gaussian"; }
  Index dim() const override { return var_.size(); }
  const Vec& variances() const { return var_; }

  double potential(const Vec& x) const override { return 0.5 * x.cwiseProduct(x).dot(prec_); }
  double partial(Index i, const Vec& x) const override { return prec_[i] * x[i]; }
  void gradient(const Vec& x, Vec& g) const override { g = prec_.cwiseProduct(x); }

  const std::vector<Factor>* factors() const override { return &factors_; }
  const GaussianComponent* gaussian_component() const override { return &gc_; }

  std::vector<ClockRule> zz_clocks() const override {
    std::vector<ClockRule> out;
    for (Index i = 0; i < dim(); ++i) {
      const double p = prec_[i];
      out.emplace_back(ExactClock{[p, i](const Vec& x, const Vec& v) {
        return RateFamily{LinearRate{p * v[i] * x[i], p * v[i] * v[i]}};
      }});
    }
    return out;
  }

  /// <v, P(x + v t)> is linear in t.
  std::optional<ClockRule> bps_clock() const override {
    const Vec p = prec_;
    return ClockRule{ExactClock{[p](const Vec& x, const Vec& v) {
      return RateFamily{LinearRate{v.dot(p.cwiseProduct(x)), v.dot(p.cwiseProduct(v))}};
    }}};
  }

  double cdf(Index i, double x) const { return 0.5 * boost::math::erfc(-x / std::sqrt(2.0 * var_[i])); }

 private:
  Vec var_, prec_;
  std::vector<Factor> factors_;
  GaussianComponent gc_;
};

inline ModelPtr build_gaussian(const Vec& variances) { return std::make_shared<AnisotropicGaussian>(variances); }

}  // namespace ndmc
