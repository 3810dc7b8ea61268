#pragma once

// Chain quality metrics: autocorrelation, effective sample size,
// Kolmogorov-Smirnov tests and image error measures.

#include <ndmc/chain.hpp>

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <complex>
#include <functional>
#include <vector>

namespace ndmc {

/// Sample autocorrelation rho_0..rho_max_lag by direct summation, using the
/// biased (divide by N) autocovariance. A constant series yields rho_0 = 1
/// and zeros elsewhere.
inline Vec acf_direct(const Vec& x, Index max_lag) {
  const Index n = x.size();
  require(n > 0, "acf: empty series");
  max_lag = std::min(max_lag, n - 1);
  const Vec c = x.array() - x.mean();
  const double c0 = c.squaredNorm();
  Vec r = Vec::Zero(max_lag + 1);
  r[0] = 1.0;
  if (c0 == 0.0) return r;
  for (Index k = 1; k <= max_lag; ++k) r[k] = c.head(n - k).dot(c.tail(n - k)) / c0;
  return r;
}

/// Same quantity via a zero-padded FFT.
inline Vec acf_fft(const Vec& x, Index max_lag) {
  const Index n = x.size();
  require(n > 0, "acf: empty series");
  max_lag = std::min(max_lag, n - 1);
  Index m = 1;
  while (m < 2 * n) m <<= 1;
  std::vector<double> padded(static_cast<std::size_t>(m), 0.0);
  const double mean = x.mean();
  for (Index i = 0; i < n; ++i) padded[static_cast<std::size_t>(i)] = x[i] - mean;
  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> spec;
  fft.fwd(spec, padded);
  for (auto& z : spec) z = std::norm(z);
  std::vector<double> ac;
  fft.inv(ac, spec);
  Vec r = Vec::Zero(max_lag + 1);
  r[0] = 1.0;
  if (ac[0] <= 0.0) return r;
  for (Index k = 1; k <= max_lag; ++k) r[k] = ac[static_cast<std::size_t>(k)] / ac[0];
  return r;
}

struct EssResult {
  double ess = 1.0;
  double tau = 1.0;  // integrated autocorrelation time, N / ess
  bool degenerate = false;
};

/// Geyer's initial monotone sequence estimator on a single series.
/// Capped at the series length.
inline EssResult ess_series(const Vec& x) {
  const Index n = x.size();
  if (n < 100) throw InsufficientData("ess: need at least 100 samples");
  EssResult out;
  if ((x.array() == x[0]).all()) {
    out.degenerate = true;
    out.tau = static_cast<double>(n);
    return out;
  }
  const Vec rho = acf_fft(x, n - 1);
  double sum = 0.0, prev = kInf;
  for (Index k = 0; 2 * k + 1 < n; ++k) {
    double pair = rho[2 * k] + rho[2 * k + 1];
    if (pair <= 0.0) break;
    pair = std::min(pair, prev);
    prev = pair;
    sum += pair;
  }
  out.tau = std::max(2.0 * sum - 1.0, 1.0);
  out.ess = static_cast<double>(n) / out.tau;
  return out;
}

inline EssResult ess(const SampleChain& chain, Index coord) { return ess_series(chain.coordinate(coord)); }

/// Every ceil(factor * tau)-th value of the series, tau from `ess_series`.
inline std::vector<double> thin_by_tau(const Vec& x, double factor = 2.0) {
  const double tau = ess_series(x).tau;
  const auto step = static_cast<Index>(std::ceil(factor * tau));
  std::vector<double> out;
  for (Index k = 0; k < x.size(); k += std::max<Index>(step, 1)) out.push_back(x[k]);
  return out;
}

struct KsResult {
  double statistic = 0.0;
  double p_value = 1.0;
};

/// Kolmogorov limiting survival function Q(t) = 2 sum_k (-1)^(k-1) exp(-2 k^2 t^2).
inline double kolmogorov_q(double t) {
  if (t <= 0.0) return 1.0;
  if (t < 0.2) return 1.0;  // series sum is 1 to double precision
  double s = 0.0;
  for (int k = 1; k <= 100; ++k) {
    const double term = std::exp(-2.0 * k * k * t * t);
    s += (k % 2 == 1 ? term : -term);
    if (term < 1e-17) break;
  }
  return std::clamp(2.0 * s, 0.0, 1.0);
}

/// One-sample test against a continuous CDF, with Stephens' small-sample
/// correction of the asymptotic p-value.
inline KsResult ks_test(std::vector<double> samples, const std::function<double(double)>& cdf) {
  const std::size_t n = samples.size();
  if (n < 20) throw InsufficientData("ks_test: fewer than 20 samples");
  std::sort(samples.begin(), samples.end());
  double d = 0.0;
  const double dn = static_cast<double>(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double f = cdf(samples[k]);
    d = std::max({d, static_cast<double>(k + 1) / dn - f, f - static_cast<double>(k) / dn});
  }
  const double en = std::sqrt(dn);
  return {d, kolmogorov_q((en + 0.12 + 0.11 / en) * d)};
}

inline KsResult ks_test(const SampleChain& chain, Index coord, const std::function<double(double)>& cdf) {
  const Vec c = chain.coordinate(coord);
  return ks_test(std::vector<double>(c.data(), c.data() + c.size()), cdf);
}

inline KsResult ks_two_sample(std::vector<double> a, std::vector<double> b) {
  if (a.size() < 20 || b.size() < 20) throw InsufficientData("ks_two_sample: fewer than 20 samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  const double na = static_cast<double>(a.size()), nb = static_cast<double>(b.size());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double t = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= t) ++i;
    while (j < b.size() && b[j] <= t) ++j;
    d = std::max(d, std::abs(static_cast<double>(i) / na - static_cast<double>(j) / nb));
  }
  const double en = std::sqrt(na * nb / (na + nb));
  return {d, kolmogorov_q((en + 0.12 + 0.11 / en) * d)};
}

struct Moments {
  double mean = 0.0;
  double variance = 0.0;  // unbiased
  double mean_abs = 0.0;
};

inline Moments moments(const Vec& x) {
  Moments m;
  const double n = static_cast<double>(x.size());
  require(x.size() > 1, "moments: need at least two samples");
  m.mean = x.mean();
  m.variance = (x.array() - m.mean).square().sum() / (n - 1.0);
  m.mean_abs = x.cwiseAbs().mean();
  return m;
}

struct ImageMetrics {
  double mse = 0.0;
  double ssim = 1.0;
};

/// MSE and single-window SSIM with constants (0.01 L)^2, (0.03 L)^2, where L
/// is `data_range` or, when nonpositive, the dynamic range of the reference.
inline ImageMetrics image_metrics(const Mat& estimate, const Mat& reference, double data_range = -1.0) {
  if (estimate.rows() != reference.rows() || estimate.cols() != reference.cols())
    throw InvalidArgument("image_metrics: shape mismatch");
  require(estimate.size() > 0, "image_metrics: empty image");
  ImageMetrics out;
  out.mse = (estimate - reference).squaredNorm() / static_cast<double>(estimate.size());
  double L = data_range;
  if (L <= 0.0) L = reference.maxCoeff() - reference.minCoeff();
  if (L <= 0.0) L = 1.0;
  const double c1 = (0.01 * L) * (0.01 * L), c2 = (0.03 * L) * (0.03 * L);
  const double mx = estimate.mean(), my = reference.mean();
  const auto dx = estimate.array() - mx;
  const auto dy = reference.array() - my;
  const double n = static_cast<double>(estimate.size());
  const double vx = dx.square().sum() / n, vy = dy.square().sum() / n, cxy = (dx * dy).sum() / n;
  out.ssim = ((2 * mx * my + c1) * (2 * cxy + c2)) / ((mx * mx + my * my + c1) * (vx + vy + c2));
  return out;
}

struct DiagnosticsReport {
  std::vector<EssResult> ess;
  std::vector<double> ess_per_second;
  std::vector<Vec> acf;
  std::vector<Moments> moments;
};

/// Per-coordinate ESS, ESS per second of `wall_time`, ACF up to `max_lag`
/// and moments. Chains shorter than 100 states get moments only.
inline DiagnosticsReport make_report(const SampleChain& chain, Index max_lag = 50) {
  DiagnosticsReport rep;
  for (Index i = 0; i < chain.dim; ++i) {
    const Vec c = chain.coordinate(i);
    if (c.size() > 1) rep.moments.push_back(moments(c));
    if (c.size() >= 100) {
      rep.ess.push_back(ess_series(c));
      rep.ess_per_second.push_back(chain.wall_time > 0.0 ? rep.ess.back().ess / chain.wall_time : kInf);
      rep.acf.push_back(acf_fft(c, max_lag));
    }
  }
  return rep;
}

}  // namespace ndmc
