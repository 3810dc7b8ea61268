#pragma once

#include <ndmc/model.hpp>

namespace ndmc {

/// Low-rank denoising: U(x) = ||x - y||_F^2 / (2 sigma^2) + alpha ||x||_*,
/// with x an n x m matrix stored column-major.
///
/// The Gaussian likelihood doubles as the harmonic part of the Hamiltonian
/// BPS. Its bounces use alpha * Q V^T, the gradient of the nuclear norm away
/// from rank-deficient matrices, or the envelope gradient (x - prox(x))/lambda
/// when `hbps_lambda` > 0.
class NuclearNormDenoise final : public TargetModel {
 public:
  NuclearNormDenoise(Mat y, double sigma, double alpha, double hbps_lambda = 0.0)
      : y_(std::move(y)), sigma_(sigma), alpha_(alpha), hbps_lambda_(hbps_lambda) {
    require(sigma_ > 0.0 && alpha_ >= 0.0, "NuclearNormDenoise: need sigma > 0 and alpha >= 0");
    require(hbps_lambda_ >= 0.0, "NuclearNormDenoise: hbps_lambda must be nonnegative");
    yv_ = Eigen::Map<const Vec>(y_.data(), y_.size());
    const double s2 = sigma_ * sigma_;
    const Vec yv = yv_;
    split_.smooth_potential = [yv, s2](const Vec& x) { return (x - yv).squaredNorm() / (2.0 * s2); };
    split_.smooth_gradient = [yv, s2](const Vec& x, Vec& g) { g = (x - yv) / s2; };
    const Index r = y_.rows(), c = y_.cols();
    const double a = alpha_;
    split_.nonsmooth_potential = [r, c, a](const Vec& x) { return a * nuclear_norm(Eigen::Map<const Mat>(x.data(), r, c)); };
    split_.prox.kind = ProxKind::NuclearNorm;
    split_.prox.alpha = alpha_ > 0.0 ? alpha_ : 1e-300;
    split_.prox.rows = r;
    split_.prox.cols = c;

    gc_.mean = yv_;
    gc_.variances = Vec::Constant(yv_.size(), s2);
    gc_.remainder_gradient_bound = alpha_ * std::sqrt(static_cast<double>(std::min(r, c)));
    if (hbps_lambda_ > 0.0) {
      const double lam = hbps_lambda_;
      gc_.remainder_gradient = [r, c, a, lam](const Vec& x, Vec& g) {
        if (a == 0.0) {
          g = Vec::Zero(x.size());
          return;
        }
        g = (x - prox_nuclear(Eigen::Map<const Mat>(x.data(), r, c), lam, a).point) / lam;
      };
    } else {
      gc_.remainder_gradient = [this](const Vec& x, Vec& g) { nuclear_gradient(x, g); };
    }
  }

  NuclearNormDenoise(const NuclearNormDenoise&) = delete;
  NuclearNormDenoise& operator=(const NuclearNormDenoise&) = delete;

  std::string name() const override { return "nuclear"; }
  Index dim() const override { return y_.size(); }
  Index rows() const { return y_.rows(); }
  Index cols() const { return y_.cols(); }

  double potential(const Vec& x) const override {
    return (x - yv_).squaredNorm() / (2.0 * sigma_ * sigma_) +
           alpha_ * nuclear_norm(Eigen::Map<const Mat>(x.data(), rows(), cols()));
  }

  /// The nuclear norm is differentiable exactly where x has full rank.
  bool nondifferentiable(Index, const Vec& x) const override {
    if (alpha_ == 0.0) return false;
    Eigen::JacobiSVD<Mat> svd(Eigen::Map<const Mat>(x.data(), rows(), cols()));
    return svd.singularValues().minCoeff() == 0.0;
  }

  double partial(Index i, const Vec& x) const override {
    Vec g;
    gradient(x, g);
    return g[i];
  }

  void gradient(const Vec& x, Vec& g) const override {
    nuclear_gradient(x, g);
    g += (x - yv_) / (sigma_ * sigma_);
  }

  /// alpha Q V^T, or zero on rank-deficient x.
  void nuclear_gradient(const Vec& x, Vec& g) const {
    g = Vec::Zero(x.size());
    if (alpha_ == 0.0) return;
    Eigen::JacobiSVD<Mat> svd(Eigen::Map<const Mat>(x.data(), rows(), cols()), Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.singularValues().minCoeff() == 0.0) return;
    const Mat qv = alpha_ * svd.matrixU() * svd.matrixV().transpose();
    g = Eigen::Map<const Vec>(qv.data(), qv.size());
  }

  const SmoothSplit* split() const override { return alpha_ > 0.0 ? &split_ : nullptr; }
  const GaussianComponent* gaussian_component() const override { return &gc_; }

  /// v_i dU/dx_i(x + v t) <= max(0, v_i (x_i - y_i)/sigma^2) + alpha + t/sigma^2,
  /// since every entry of Q V^T is at most one in magnitude.
  std::vector<ClockRule> zz_clocks() const override {
    std::vector<ClockRule> out;
    const double s2 = sigma_ * sigma_, a = alpha_;
    for (Index i = 0; i < dim(); ++i) {
      BoundStrategy b;
      b.kind = BoundKind::LinearInT;
      const double yi = yv_[i];
      b.payload = [i, yi, s2, a](const Vec& x, const Vec& v, double) {
        return LinearBound{std::max(0.0, v[i] * (x[i] - yi) / s2) + a, 1.0 / s2};
      };
      b.lookahead_theta = 1.0;
      out.emplace_back(b);
    }
    return out;
  }

  std::optional<ClockRule> bps_clock() const override {
    BoundStrategy b;
    b.kind = BoundKind::LinearInT;
    const double s2 = sigma_ * sigma_, g = gc_.remainder_gradient_bound;
    const Vec yv = yv_;
    b.payload = [s2, g, yv](const Vec& x, const Vec& v, double) {
      return LinearBound{std::max(0.0, v.dot(x - yv) / s2) + g * v.norm(), v.squaredNorm() / s2};
    };
    b.lookahead_theta = 1.0;
    return b;
  }

 private:
  Mat y_;
  Vec yv_;
  double sigma_, alpha_, hbps_lambda_;
  SmoothSplit split_;
  GaussianComponent gc_;
};

/// n x n checkerboard with checks cycling through {0, 0.7, 1}, one check per
/// `block` entries.
inline Mat checkerboard(Index n, Index block = 1) {
  static constexpr double levels[3] = {0.0, 0.7, 1.0};
  Mat x(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) x(i, j) = levels[(i / block + j / block) % 3];
  return x;
}

inline ModelPtr build_nuclear(const Mat& y, double sigma, double alpha, double hbps_lambda = 0.0) {
  return std::make_shared<NuclearNormDenoise>(y, sigma, alpha, hbps_lambda);
}

}  // namespace ndmc
