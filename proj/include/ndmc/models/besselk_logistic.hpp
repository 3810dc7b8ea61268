#pragma once

#include <ndmc/model.hpp>
#include <ndmc/models/bessel.hpp>

namespace ndmc {

/// Logistic regression with independent Bessel-K priors
/// p(x_i) ~ z^nu K_nu(z), z = |x_i| + eps, nu = p - 1/2.
/// Z is n parameters by d observations; observation j has covariates Z.col(j).
class BesselKLogistic final : public TargetModel {
 public:
  BesselKLogistic(Mat Z, Vec y, double p = 0.002, double eps = 0.05)
      : Z_(std::move(Z)), y_(std::move(y)), p_(p), eps_(eps), nu_(p - 0.5) {
    require(p_ > 0.0 && eps_ > 0.0, "BesselKLogistic: p and eps must be positive");
    if (Z_.cols() != y_.size()) throw InvalidArgument("BesselKLogistic: Z must have one column per label");
    for (Index j = 0; j < y_.size(); ++j)
      if (y_[j] != 1.0 && y_[j] != -1.0) throw InvalidArgument("BesselKLogistic: labels must be -1 or +1");
    prior_slope_max_ = prior_slope(0.0);
    abs_row_sums_ = Z_.cwiseAbs().rowwise().sum();
  }

  std::string name() const override { return "besselk_logistic"; }
  Index dim() const override { return Z_.rows(); }
  double nu() const { return nu_; }

  /// -log prior of one coordinate, up to a constant.
  double prior_potential(double x) const {
    const double z = std::abs(x) + eps_;
    return -(nu_ * std::log(z) + bessel::log_k(nu_, z));
  }
  /// d/d|x| of prior_potential: K_{nu-1}(z) / K_nu(z).
  double prior_slope(double x) const { return bessel::ratio(nu_, -1.0, std::abs(x) + eps_); }

  double potential(const Vec& x) const override {
    const Vec eta = Z_.transpose() * x;
    double u = 0.0;
    for (Index j = 0; j < eta.size(); ++j) u += softplus(-y_[j] * eta[j]);
    for (Index i = 0; i < x.size(); ++i) u += prior_potential(x[i]);
    return u;
  }

  bool nondifferentiable(Index i, const Vec& x) const override { return x[i] == 0.0; }

  double partial(Index i, const Vec& x) const override {
    const Vec eta = Z_.transpose() * x;
    double g = 0.0;
    for (Index j = 0; j < eta.size(); ++j) g -= y_[j] * Z_(i, j) * logistic(-y_[j] * eta[j]);
    if (x[i] == 0.0) return 0.0;
    return g + sgn(x[i]) * prior_slope(x[i]);
  }

  void gradient(const Vec& x, Vec& g) const override {
    const Vec eta = Z_.transpose() * x;
    Vec w(eta.size());
    for (Index j = 0; j < eta.size(); ++j) w[j] = -y_[j] * logistic(-y_[j] * eta[j]);
    g = Z_ * w;
    for (Index i = 0; i < x.size(); ++i) g[i] = x[i] == 0.0 ? 0.0 : g[i] + sgn(x[i]) * prior_slope(x[i]);
  }

  /// Constant bounds sum_j |Z_ij| + K_{nu-1}(eps)/K_nu(eps); the prior slope
  /// is largest at the origin.
  std::vector<ClockRule> zz_clocks() const override {
    std::vector<ClockRule> out;
    for (Index i = 0; i < dim(); ++i) out.emplace_back(constant_bound(abs_row_sums_[i] + prior_slope_max_, 1.0));
    return out;
  }

 private:
  static double softplus(double t) { return t > 0.0 ? t + std::log1p(std::exp(-t)) : std::log1p(std::exp(t)); }
  static double logistic(double t) {
    if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
    const double e = std::exp(t);
    return e / (1.0 + e);
  }

  Mat Z_;
  Vec y_;
  double p_, eps_, nu_;
  double prior_slope_max_ = 0.0;
  Vec abs_row_sums_;
};

struct SparseLogisticData {
  Mat Z;       // n x d, rows standardized across observations
  Vec y;       // labels in {-1, +1}
  Vec truth;   // planted coefficients
  std::vector<Index> support;
};

/// Synthetic sparse logistic data: Gaussian covariates with standardized
/// rows, `k` planted coefficients of the given magnitude with alternating
/// signs at random positions, labels drawn from the logistic model.
inline SparseLogisticData make_sparse_logistic(Index n, Index d, Index k, double magnitude, std::uint64_t seed) {
  require(k <= n && d > 1, "make_sparse_logistic: need k <= n and d > 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  SparseLogisticData out;
  out.Z.resize(n, d);
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) out.Z(i, j) = normal(rng);
    const double m = out.Z.row(i).mean();
    out.Z.row(i).array() -= m;
    const double s = std::sqrt(out.Z.row(i).squaredNorm() / static_cast<double>(d - 1));
    out.Z.row(i) /= s;
  }
  std::vector<Index> idx(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) idx[static_cast<std::size_t>(i)] = i;
  std::shuffle(idx.begin(), idx.end(), rng);
  out.support.assign(idx.begin(), idx.begin() + k);
  std::sort(out.support.begin(), out.support.end());
  out.truth = Vec::Zero(n);
  for (std::size_t s = 0; s < out.support.size(); ++s) out.truth[out.support[s]] = (s % 2 == 0 ? 1.0 : -1.0) * magnitude;
  const Vec eta = out.Z.transpose() * out.truth;
  std::uniform_real_distribution<double> unif;
  out.y.resize(d);
  for (Index j = 0; j < d; ++j) out.y[j] = unif(rng) < 1.0 / (1.0 + std::exp(-eta[j])) ? 1.0 : -1.0;
  return out;
}

inline ModelPtr build_besselk_logistic(const Mat& Z, const Vec& y, double p = 0.002, double eps = 0.05) {
  return std::make_shared<BesselKLogistic>(Z, y, p, eps);
}

}  // namespace ndmc
