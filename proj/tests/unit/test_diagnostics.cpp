#include <ndmc/diagnostics.hpp>

#include <gtest/gtest.h>

#include <random>

using namespace ndmc;

namespace {

Vec iid_normal(Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  Vec x(n);
  for (Index i = 0; i < n; ++i) x[i] = z(rng);
  return x;
}

Vec ar1(Index n, double phi, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  Vec x(n);
  x[0] = z(rng) / std::sqrt(1 - phi * phi);
  for (Index i = 1; i < n; ++i) x[i] = phi * x[i - 1] + z(rng);
  return x;
}

double normal_cdf(double t) { return 0.5 * std::erfc(-t / std::sqrt(2.0)); }

// Textbook SSIM over one global window, written out term by term.
double ssim_reference(const Mat& a, const Mat& b, double L) {
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (Index k = 0; k < a.size(); ++k) {
    ma += a.data()[k];
    mb += b.data()[k];
  }
  ma /= n;
  mb /= n;
  double va = 0, vb = 0, cab = 0;
  for (Index k = 0; k < a.size(); ++k) {
    va += (a.data()[k] - ma) * (a.data()[k] - ma);
    vb += (b.data()[k] - mb) * (b.data()[k] - mb);
    cab += (a.data()[k] - ma) * (b.data()[k] - mb);
  }
  va /= n;
  vb /= n;
  cab /= n;
  const double k1 = 0.01 * L, k2 = 0.03 * L;
  const double lum = (2 * ma * mb + k1 * k1) / (ma * ma + mb * mb + k1 * k1);
  const double cs = (2 * cab + k2 * k2) / (va + vb + k2 * k2);
  return lum * cs;
}

}  // namespace

TEST(Acf, LagZeroIsOne) {
  const Vec x = ar1(500, 0.5, 1);
  EXPECT_DOUBLE_EQ(acf_direct(x, 10)[0], 1.0);
  EXPECT_DOUBLE_EQ(acf_fft(x, 10)[0], 1.0);
}

TEST(Acf, DirectAndFftAgree) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const Vec x = ar1(3000, 0.8, seed);
    const Vec a = acf_direct(x, 200), b = acf_fft(x, 200);
    EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-10);
  }
}

TEST(Acf, Ar1DecaysGeometrically) {
  const Vec r = acf_fft(ar1(200000, 0.7, 4), 3);
  EXPECT_NEAR(r[1], 0.7, 0.01);
  EXPECT_NEAR(r[2], 0.49, 0.01);
}

TEST(Ess, IndependentDrawsNearN) {
  const Index n = 100000;
  const auto e = ess_series(iid_normal(n, 5));
  EXPECT_GE(e.ess, 0.9 * n);
  EXPECT_LE(e.ess, 1.1 * n);
  EXPECT_FALSE(e.degenerate);
}

TEST(Ess, Ar1MatchesIntegratedAutocorrelation) {
  const Index n = 200000;
  const double phi = 0.9;
  const double expected = n * (1 - phi) / (1 + phi);
  const auto e = ess_series(ar1(n, phi, 6));
  EXPECT_NEAR(e.ess / expected, 1.0, 0.2);
}

TEST(Ess, ConstantChainIsDegenerate) {
  const auto e = ess_series(Vec::Constant(500, 3.0));
  EXPECT_EQ(e.ess, 1.0);
  EXPECT_TRUE(e.degenerate);
}

TEST(Ess, ShortChainThrows) { EXPECT_THROW(ess_series(Vec::Zero(99)), InsufficientData); }

TEST(Ess, AffineInvariant) {
  const Vec x = ar1(5000, 0.6, 7);
  const Vec y = (-3.5 * x).array() + 12.0;
  EXPECT_NEAR(ess_series(x).ess, ess_series(y).ess, 1e-6 * ess_series(x).ess);
}

TEST(Ess, BoundedByChainLength) {
  // strongly anticorrelated series would exceed N without the cap
  Vec x(1000);
  for (Index i = 0; i < x.size(); ++i) x[i] = (i % 2 == 0 ? 1.0 : -1.0) + 1e-3 * std::sin(static_cast<double>(i));
  const auto e = ess_series(x);
  EXPECT_GT(e.ess, 0.0);
  EXPECT_LE(e.ess, 1000.0);
}

TEST(Ess, ChainOverload) {
  SampleChain c(2);
  const Vec a = ar1(1000, 0.5, 8);
  for (Index k = 0; k < a.size(); ++k) c.push(Eigen::Vector2d(a[k], 1.0));
  EXPECT_NEAR(ess(c, 0).ess, ess_series(a).ess, 1e-9);
  EXPECT_TRUE(ess(c, 1).degenerate);
}

TEST(Kolmogorov, KnownValues) {
  EXPECT_NEAR(kolmogorov_q(1.36), 0.0494, 5e-4);
  EXPECT_NEAR(kolmogorov_q(1.63), 0.0098, 2e-4);
  EXPECT_DOUBLE_EQ(kolmogorov_q(0.0), 1.0);
}

TEST(Ks, CalibratedUnderNull) {
  int passes = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const Vec x = iid_normal(1000, 1000 + seed);
    const auto r = ks_test(std::vector<double>(x.data(), x.data() + x.size()), normal_cdf);
    EXPECT_GE(r.p_value, 0.0);
    EXPECT_LE(r.p_value, 1.0);
    passes += r.p_value > 0.01;
  }
  EXPECT_GE(passes, 97);
}

TEST(Ks, DetectsShift) {
  const Vec x = iid_normal(2000, 9).array() + 0.3;
  const auto r = ks_test(std::vector<double>(x.data(), x.data() + x.size()), normal_cdf);
  EXPECT_LT(r.p_value, 0.001);
}

TEST(Ks, TinySampleThrows) {
  EXPECT_THROW(ks_test(std::vector<double>(19, 0.0), normal_cdf), InsufficientData);
}

TEST(Ks, MonotoneTransformInvariant) {
  const Vec x = iid_normal(500, 10);
  std::vector<double> a(x.data(), x.data() + x.size()), b;
  for (double v : a) b.push_back(std::exp(v));
  const auto ra = ks_test(a, normal_cdf);
  const auto rb = ks_test(b, [](double t) { return t <= 0 ? 0.0 : normal_cdf(std::log(t)); });
  EXPECT_NEAR(ra.statistic, rb.statistic, 1e-12);
}

TEST(Ks, TwoSampleSameAndShifted) {
  const Vec a = iid_normal(3000, 11), b = iid_normal(3000, 12);
  const std::vector<double> va(a.data(), a.data() + a.size()), vb(b.data(), b.data() + b.size());
  EXPECT_GT(ks_two_sample(va, vb).p_value, 0.01);
  std::vector<double> vc = vb;
  for (double& v : vc) v += 0.3;
  EXPECT_LT(ks_two_sample(va, vc).p_value, 0.001);
}

TEST(Ks, ThinnedCorrelatedChainPasses) {
  const double phi = 0.95;
  const Vec x = ar1(100000, phi, 13) * std::sqrt(1 - phi * phi);
  const auto thin = thin_by_tau(x);
  EXPECT_GT(thin.size(), 500u);
  EXPECT_GT(ks_test(thin, normal_cdf).p_value, 0.01);
}

TEST(Moments, MatchClosedForm) {
  const Vec x = Eigen::Vector4d(1, -2, 3, 6);
  const auto m = moments(x);
  EXPECT_DOUBLE_EQ(m.mean, 2.0);
  EXPECT_DOUBLE_EQ(m.variance, 34.0 / 3.0);
  EXPECT_DOUBLE_EQ(m.mean_abs, 3.0);
}

TEST(ImageMetrics, IdenticalImages) {
  const Mat a = Mat::Random(16, 16);
  const auto r = image_metrics(a, a);
  EXPECT_DOUBLE_EQ(r.mse, 0.0);
  EXPECT_NEAR(r.ssim, 1.0, 1e-14);
}

TEST(ImageMetrics, ConstantOffset) {
  const Mat a = Mat::Random(10, 12);
  const Mat b = a.array() + 0.25;
  EXPECT_NEAR(image_metrics(b, a).mse, 0.0625, 1e-14);
}

TEST(ImageMetrics, SsimMatchesDirectFormula) {
  std::mt19937_64 rng(14);
  std::uniform_real_distribution<double> u;
  for (int rep = 0; rep < 5; ++rep) {
    Mat a(20, 20), b(20, 20);
    for (Index k = 0; k < a.size(); ++k) {
      a.data()[k] = u(rng);
      b.data()[k] = 0.5 * a.data()[k] + 0.5 * u(rng);
    }
    EXPECT_NEAR(image_metrics(b, a, 1.0).ssim, ssim_reference(b, a, 1.0), 1e-12);
  }
}

TEST(ImageMetrics, ShapeMismatchThrows) {
  EXPECT_THROW(image_metrics(Mat::Zero(4, 4), Mat::Zero(4, 5)), InvalidArgument);
}

TEST(Report, FieldsConsistent) {
  SampleChain c(1);
  const Vec a = ar1(2000, 0.5, 15);
  for (Index k = 0; k < a.size(); ++k) c.push(Vec::Constant(1, a[k]));
  c.wall_time = 2.0;
  const auto rep = make_report(c, 20);
  ASSERT_EQ(rep.ess.size(), 1u);
  EXPECT_GT(rep.ess[0].ess, 0.0);
  EXPECT_LE(rep.ess[0].ess, 2000.0);
  EXPECT_DOUBLE_EQ(rep.ess_per_second[0], rep.ess[0].ess / 2.0);
  EXPECT_DOUBLE_EQ(rep.acf[0][0], 1.0);
}
