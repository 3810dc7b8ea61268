#include <ndmc/models/besselk_logistic.hpp>
#include <ndmc/models/gaussian.hpp>
#include <ndmc/models/laplace.hpp>
#include <ndmc/models/nuclear.hpp>
#include <ndmc/models/tv_deblur.hpp>
#include <ndmc/models/wrapped_mixture.hpp>

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <filesystem>

using namespace ndmc;

namespace {

using PointGen = std::function<Vec(std::mt19937_64&)>;

Vec normal_point(std::mt19937_64& rng, Index n, double scale = 1.0) {
  std::normal_distribution<double> z;
  Vec x(n);
  for (Index i = 0; i < n; ++i) x[i] = scale * z(rng);
  return x;
}

/// Largest deviation between the declared gradient and central differences
/// over `n` random points, relative to max(1, |g|).
double gradient_mismatch(const TargetModel& m, const PointGen& gen, int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  double worst = 0.0;
  for (int k = 0; k < n; ++k) {
    const Vec x = gen(rng);
    Vec g;
    m.gradient(x, g);
    const Vec fd = oracle::central_difference([&](const Vec& y) { return m.potential(y); }, x, 1e-6);
    worst = std::max(worst, ((g - fd).array() / g.cwiseAbs().cwiseMax(1.0).array()).abs().maxCoeff());
    for (Index i = 0; i < x.size(); ++i) EXPECT_NEAR(m.partial(i, x), g[i], 1e-12 * std::max(1.0, std::abs(g[i])));
  }
  return worst;
}

}  // namespace

// --- Laplace / Gaussian ----------------------------------------------------

TEST(LaplaceModel, GradientAndKinks) {
  const auto m = build_laplace(Eigen::Vector3d(1, 2, 3));
  EXPECT_LT(gradient_mismatch(*m, [](auto& r) { return normal_point(r, 3); }, 100, 1), 1e-5);
  const Vec x = Eigen::Vector3d(0.0, -1.0, 2.0);
  EXPECT_TRUE(m->nondifferentiable(0, x));
  EXPECT_EQ(m->partial(0, x), 0.0);
  EXPECT_EQ(m->partial(1, x), -2.0);
}

TEST(LaplaceModel, AbsMomentByQuadrature) {
  const double z = oracle::integrate_real_line([](double t) { return std::exp(-std::abs(t)); });
  const double m1 = oracle::integrate_real_line([](double t) { return std::abs(t) * std::exp(-std::abs(t)); });
  EXPECT_NEAR(m1 / z, 1.0, 1e-10);
}

TEST(LaplaceModel, FactorsAndRates) {
  const auto m = build_laplace(Vec::LinSpaced(10, 1, 10));
  const auto rep = validate_factors(*m, 100, 1e-8);
  EXPECT_LT(rep.max_residual, 1e-8);
  // moving toward the origin: silent until it is crossed
  const auto r = std::get<PiecewiseConstantRate>(AnisotropicLaplace::rate(2.0, -1.5, 0.5));
  EXPECT_DOUBLE_EQ(r.zero_until, 3.0);
  EXPECT_DOUBLE_EQ(r.rate, 1.0);
}

TEST(LaplaceModel, RejectsNonpositiveBeta) {
  EXPECT_THROW(build_laplace(Eigen::Vector2d(1, 0)), InvalidArgument);
}

TEST(GaussianModel, GradientFactorsCdf) {
  const Vec var = (1.0 / Vec::LinSpaced(10, 1, 10).array().square()).matrix();
  const auto m = build_gaussian(var);
  EXPECT_LT(gradient_mismatch(*m, [](auto& r) { return normal_point(r, 10, 0.3); }, 100, 2), 1e-5);
  Vec g;
  m->gradient(Vec::Zero(10), g);
  EXPECT_EQ(g.norm(), 0.0);
  validate_factors(*m, 100, 1e-8);
  const auto* gm = static_cast<const AnisotropicGaussian*>(m.get());
  EXPECT_NEAR(gm->cdf(1, 0.5), 0.5 * std::erfc(-0.5 / std::sqrt(2 * var[1])), 1e-15);
  EXPECT_THROW(build_gaussian(Eigen::Vector2d(1, -1)), InvalidArgument);
}

// --- Bessel K --------------------------------------------------------------

TEST(Bessel, RecurrenceHolds) {
  for (double nu : {-0.498, 0.3, 1.7}) {
    for (double z = 0.05; z <= 50.0; z *= 1.3) {
      const double km = std::exp(bessel::log_k(nu - 1, z)), k0 = std::exp(bessel::log_k(nu, z)),
                   kp = std::exp(bessel::log_k(nu + 1, z));
      EXPECT_NEAR(kp / (km + 2 * nu / z * k0), 1.0, 1e-8) << "nu=" << nu << " z=" << z;
    }
  }
}

TEST(Bessel, AsymptoticBranchContinuous) {
  for (double nu : {-0.498, 0.5, 2.0})
    EXPECT_NEAR(bessel::log_k_asymptotic(nu, 500.0), std::log(boost::math::cyl_bessel_k(nu, 500.0)), 1e-12 * 500);
  EXPECT_TRUE(std::isfinite(bessel::log_k(0.3, 5000.0)));
  EXPECT_THROW(bessel::log_k(0.3, 0.0), DomainError);
}

TEST(Bessel, HalfOrderClosedForm) {
  // K_{1/2}(z) = sqrt(pi / (2 z)) e^{-z}
  for (double z : {0.1, 1.0, 10.0})
    EXPECT_NEAR(bessel::log_k(0.5, z), 0.5 * std::log(std::numbers::pi / (2 * z)) - z, 1e-12);
}

// --- Bessel-K logistic -----------------------------------------------------

TEST(BesselKLogisticModel, GradientMatchesFiniteDifferences) {
  const auto d = make_sparse_logistic(12, 30, 3, 2.0, 3);
  const BesselKLogistic m(d.Z, d.y);
  EXPECT_LT(gradient_mismatch(m, [](auto& r) { return normal_point(r, 12); }, 100, 3), 1e-5);
}

TEST(BesselKLogisticModel, PriorIsSpikyAndNonConvex) {
  const BesselKLogistic m(Mat::Zero(1, 2), Eigen::Vector2d(1, -1));
  // across the origin the log density peaks; away from it the tail is log-convex
  auto logp = [&](double x) { return -m.prior_potential(x); };
  const double h = 0.05;
  bool pos = false, neg = false;
  for (double x = 0.0; x < 5.0; x += h) {
    const double d2 = logp(x + h) - 2 * logp(x) + logp(x - h);
    pos |= d2 > 0;
    neg |= d2 < 0;
  }
  EXPECT_TRUE(pos);
  EXPECT_TRUE(neg);
  EXPECT_GT(logp(0.0), logp(0.5));
  EXPECT_DOUBLE_EQ(logp(0.7), logp(-0.7));
  EXPECT_NEAR(m.prior_slope(0.3),
              (m.prior_potential(0.3 + 1e-6) - m.prior_potential(0.3 - 1e-6)) / 2e-6, 1e-5);
}

TEST(BesselKLogisticModel, ConstantClockBoundsDominate) {
  const auto d = make_sparse_logistic(8, 20, 2, 2.0, 4);
  const BesselKLogistic m(d.Z, d.y);
  const auto clocks = m.zz_clocks();
  std::mt19937_64 rng(5);
  for (int k = 0; k < 200; ++k) {
    const Vec x = normal_point(rng, 8, 3.0);
    Vec v = Vec::Ones(8);
    v[k % 8] = -1;
    for (Index i = 0; i < 8; ++i) {
      const auto& b = std::get<BoundStrategy>(clocks[static_cast<std::size_t>(i)]);
      EXPECT_LE(std::max(0.0, v[i] * m.partial(i, x)), b.payload(x, v, 1.0).a);
    }
  }
}

TEST(BesselKLogisticModel, Validation) {
  EXPECT_THROW(BesselKLogistic(Mat::Zero(2, 3), Vec::Ones(2)), InvalidArgument);
  EXPECT_THROW(BesselKLogistic(Mat::Zero(2, 2), Eigen::Vector2d(1, 0)), InvalidArgument);
  EXPECT_THROW(BesselKLogistic(Mat::Zero(2, 2), Eigen::Vector2d(1, -1), 0.0), InvalidArgument);
}

TEST(BesselKLogisticModel, SyntheticDataShape) {
  const auto d = make_sparse_logistic(50, 40, 5, 2.0, 6);
  EXPECT_EQ(d.Z.rows(), 50);
  EXPECT_EQ(d.Z.cols(), 40);
  EXPECT_EQ(d.support.size(), 5u);
  EXPECT_EQ((d.truth.array() != 0).count(), 5);
  EXPECT_LT(d.Z.rowwise().mean().cwiseAbs().maxCoeff(), 1e-12);
  for (Index j = 0; j < 40; ++j) EXPECT_TRUE(d.y[j] == 1 || d.y[j] == -1);
}

// --- wrapped Laplace mixture -----------------------------------------------

TEST(WrappedMixtureModel, ComponentNormalizes) {
  for (auto [lam, kap] : {std::pair{1.0, 1.0}, {0.3, 2.5}, {4.0, 0.4}}) {
    const double z = oracle::integrate([&](double t) { return WrappedLaplace::eval(t, lam, kap).value; }, 0.0,
                                       2 * std::numbers::pi);
    EXPECT_NEAR(z, 1.0, 1e-8);
  }
}

TEST(WrappedMixtureModel, SymmetricAtUnitSkew) {
  for (double t : {0.2, 1.0, 2.5, 3.0})
    EXPECT_NEAR(WrappedLaplace::eval(t, 1.7, 1.0).value, WrappedLaplace::eval(2 * std::numbers::pi - t, 1.7, 1.0).value,
                1e-14);
}

TEST(WrappedMixtureModel, ShiftCaseSplit) {
  EXPECT_DOUBLE_EQ(WrappedLaplace::shift(2.0, 1.0), 1.0);
  EXPECT_DOUBLE_EQ(WrappedLaplace::shift(1.0, 1.0), 2 * std::numbers::pi);
  EXPECT_DOUBLE_EQ(WrappedLaplace::shift(1.0, 2.0), 2 * std::numbers::pi - 1.0);
}

TEST(WrappedMixtureModel, GradientMatchesFiniteDifferences) {
  const auto data = make_two_cluster_angles(1.0, 4.0, 15, 0.3, 7);
  const WrappedLaplaceMixture m(data);
  const PointGen gen = [](std::mt19937_64& r) {
    std::uniform_real_distribution<double> u;
    Vec x(7);
    x << 2 * std::numbers::pi * u(r), 2 * std::numbers::pi * u(r), 0.5 + 2.5 * u(r), 0.5 + 2.5 * u(r),
        0.5 + 1.5 * u(r), 0.5 + 1.5 * u(r), 0.2 + 0.6 * u(r);
    return x;
  };
  EXPECT_LT(gradient_mismatch(m, gen, 100, 8), 1e-5);
}

TEST(WrappedMixtureModel, SupportAndDomain) {
  const WrappedLaplaceMixture m({0.5, 1.0, 5.0});
  Vec x(7);
  x << 1, 2, 1, 1, 1, 1, 0.5;
  EXPECT_TRUE(std::isfinite(m.potential(x)));
  x[WrappedLaplaceMixture::kRho] = 1.0;
  EXPECT_EQ(m.potential(x), kInf);
  Vec g;
  EXPECT_THROW(m.gradient(x, g), DomainError);
  x[WrappedLaplaceMixture::kRho] = 0.5;
  x[0] = 1.0;  // equals an observation
  EXPECT_TRUE(m.nondifferentiable(0, x));
  EXPECT_EQ(m.partial(0, x), 0.0);
  EXPECT_TRUE(m.domain()->is_periodic(0));
  EXPECT_FALSE(m.domain()->is_periodic(2));
  EXPECT_THROW(WrappedLaplaceMixture({7.0}), InvalidArgument);
  EXPECT_DOUBLE_EQ(WrappedLaplaceMixture::wrap(-0.5), 2 * std::numbers::pi - 0.5);
}

// --- nuclear norm ----------------------------------------------------------

TEST(NuclearModel, GradientAwayFromKinks) {
  const Mat y = checkerboard(4);
  const NuclearNormDenoise m(y, 0.3, 1.0);
  EXPECT_LT(gradient_mismatch(m, [&](auto& r) { return Vec(normal_point(r, 16)); }, 100, 9), 1e-5);
}

TEST(NuclearModel, ZeroPenaltyIsGaussian) {
  const Mat y = checkerboard(3);
  const NuclearNormDenoise m(y, 0.5, 0.0);
  const Vec x = Vec::LinSpaced(9, -1, 1);
  Vec g;
  m.gradient(x, g);
  const Vec yv = Eigen::Map<const Vec>(y.data(), 9);
  EXPECT_LT((g - (x - yv) / 0.25).norm(), 1e-12);
  EXPECT_EQ(m.split(), nullptr);
}

TEST(NuclearModel, MapOfRankOneIsRankOne) {
  const Vec u = Eigen::Vector4d(1, -2, 0.5, 1), w = Eigen::Vector4d(2, 1, -1, 0.5);
  const Mat y = u * w.transpose();
  const double sigma = 0.5, alpha = 1.0, step = 0.5 * sigma * sigma;
  // proximal gradient descent on U
  Mat x = Mat::Zero(4, 4);
  for (int k = 0; k < 500; ++k) x = prox_nuclear(Mat(x - step * (x - y) / (sigma * sigma)), step, alpha).point;
  Eigen::JacobiSVD<Mat> svd(x);
  EXPECT_GT(svd.singularValues()[0], 1.0);
  EXPECT_LT(svd.singularValues()[1], 1e-8);
}

TEST(NuclearModel, ClockBoundsDominate) {
  const Mat y = checkerboard(4);
  const NuclearNormDenoise m(y, 0.3, 1.0);
  const auto zz = m.zz_clocks();
  const auto bps = *m.bps_clock();
  std::mt19937_64 rng(10);
  std::bernoulli_distribution coin;
  for (int k = 0; k < 100; ++k) {
    const Vec x = normal_point(rng, 16);
    Vec v(16);
    for (Index i = 0; i < 16; ++i) v[i] = coin(rng) ? 1 : -1;
    const Vec vb = normal_point(rng, 16);
    for (double t : {0.0, 0.3, 1.0}) {
      Vec g, gb;
      m.gradient(x + t * v, g);
      for (Index i = 0; i < 16; ++i) {
        const auto lb = std::get<BoundStrategy>(zz[static_cast<std::size_t>(i)]).payload(x, v, 1.0);
        EXPECT_LE(std::max(0.0, v[i] * g[i]), lb.a + lb.b * t + 1e-12);
      }
      m.gradient(x + t * vb, gb);
      const auto lb = std::get<BoundStrategy>(bps).payload(x, vb, 1.0);
      EXPECT_LE(std::max(0.0, vb.dot(gb)), lb.a + lb.b * t + 1e-12);
    }
  }
}

TEST(NuclearModel, GaussianSplitForHamiltonianFlow) {
  const Mat y = checkerboard(4);
  const NuclearNormDenoise exact(y, 0.3, 1.0), smooth(y, 0.3, 1.0, 0.09);
  const auto* gc = exact.gaussian_component();
  ASSERT_NE(gc, nullptr);
  EXPECT_DOUBLE_EQ(gc->remainder_gradient_bound, 2.0);
  std::mt19937_64 rng(11);
  for (int k = 0; k < 20; ++k) {
    const Vec x = normal_point(rng, 16);
    Vec r1, r2;
    gc->remainder_gradient(x, r1);
    smooth.gaussian_component()->remainder_gradient(x, r2);
    EXPECT_LE(r1.norm(), 2.0 + 1e-12);
    EXPECT_LE(r2.norm(), 2.0 + 1e-12);
    // total gradient = Gaussian part + remainder
    Vec g;
    exact.gradient(x, g);
    const Vec yv = Eigen::Map<const Vec>(y.data(), 16);
    EXPECT_LT((g - (x - yv) / 0.09 - r1).norm(), 1e-10);
  }
}

TEST(NuclearModel, Checkerboard) {
  const Mat c = checkerboard(4);
  EXPECT_EQ(c(0, 0), 0.0);
  EXPECT_EQ(c(0, 1), 0.7);
  EXPECT_EQ(c(1, 1), 1.0);
}

// --- TV deblurring ---------------------------------------------------------

TEST(TvDeblurModel, BlurPreservesConstantsAndTvVanishes) {
  const Mat c = Mat::Constant(9, 11, 0.4);
  EXPECT_LT((blur5(c) - c).cwiseAbs().maxCoeff(), 1e-15);
  const TvDeblur m(c, 0.47, 0.03);
  const Vec x = Vec::Constant(99, 0.4);
  EXPECT_NEAR(m.potential(x), 0.0, 1e-15);
  EXPECT_TRUE(m.nondifferentiable(5, x));
}

TEST(TvDeblurModel, GradientMatchesFiniteDifferences) {
  const Mat truth = test_image(10);
  const Mat y = blurred_observation(truth, 0.1, 12);
  const TvDeblur m(y, 0.47, 0.03);
  EXPECT_LT(gradient_mismatch(m, [](auto& r) { return normal_point(r, 100); }, 100, 13), 1e-5);
}

TEST(TvDeblurModel, FactorsReconstructPotential) {
  const Mat y = blurred_observation(test_image(32), 0.47, 14);
  const TvDeblur m(y, 0.47, 0.03);
  const auto rep = validate_factors(m, 100, 1e-8, 15);
  EXPECT_LT(rep.max_residual, 1e-8);
  EXPECT_EQ(m.factors()->size(), 32u * 32u * 2u - 1u);
}

TEST(TvDeblurModel, FactorGradientsAndBounds) {
  const Mat y = blurred_observation(test_image(12), 0.47, 16);
  const TvDeblur m(y, 0.47, 0.03);
  std::mt19937_64 rng(17);
  for (const Factor& f : *m.factors()) {
    const Index k = static_cast<Index>(f.coords.size());
    const Vec x = normal_point(rng, k), v = normal_point(rng, k);
    Vec g;
    f.gradient(x, g);
    const Vec fd = oracle::central_difference(f.potential, x, 1e-6);
    EXPECT_LT((g - fd).cwiseAbs().maxCoeff(), 1e-5);
    if (f.rate_bound) {
      const double bound = f.rate_bound->payload(x, v, 1.0).a;
      for (double t : {0.0, 0.4, 1.0}) {
        Vec gt;
        f.gradient(x + t * v, gt);
        EXPECT_LE(std::max(0.0, v.dot(gt)), bound + 1e-12);
      }
    } else {
      ASSERT_TRUE(static_cast<bool>(f.exact_rate));
      const auto lr = std::get<LinearRate>(f.exact_rate(x, v));
      for (double t : {0.0, 0.4, 1.0}) {
        Vec gt;
        f.gradient(x + t * v, gt);
        EXPECT_NEAR(v.dot(gt), lr.a + lr.b * t, 1e-9);
      }
    }
  }
}

TEST(TvDeblurModel, ReflectIndex) {
  EXPECT_EQ(reflect_index(-1, 5), 0);
  EXPECT_EQ(reflect_index(-2, 5), 1);
  EXPECT_EQ(reflect_index(5, 5), 4);
  EXPECT_EQ(reflect_index(6, 5), 3);
  EXPECT_EQ(reflect_index(2, 5), 2);
}

TEST(TvDeblurModel, RejectsSmallImage) { EXPECT_THROW(TvDeblur(Mat::Zero(4, 4)), InvalidArgument); }

TEST(ImageIo, PgmRoundTrip) {
  const auto path = std::filesystem::temp_directory_path() / "ndmc_roundtrip.pgm";
  const Mat img = test_image(16);
  write_pgm(path.string(), img);
  const Mat back = read_pgm(path.string());
  ASSERT_EQ(back.rows(), 16);
  ASSERT_EQ(back.cols(), 16);
  EXPECT_LT((back - img).cwiseAbs().maxCoeff(), 0.5 / 255 + 1e-12);
  std::filesystem::remove(path);
  EXPECT_THROW(read_pgm("/nonexistent/file.pgm"), InvalidArgument);
}

TEST(ImageIo, BinaryPgm) {
  const auto path = std::filesystem::temp_directory_path() / "ndmc_binary.pgm";
  {
    std::ofstream out(path, std::ios::binary);
    out << "P5\n# comment\n2 2\n255\n";
    const unsigned char px[4] = {0, 51, 204, 255};
    out.write(reinterpret_cast<const char*>(px), 4);
  }
  const Mat m = read_pgm(path.string());
  EXPECT_NEAR(m(0, 1), 0.2, 1e-12);
  EXPECT_NEAR(m(1, 0), 0.8, 1e-12);
  EXPECT_NEAR(m(1, 1), 1.0, 1e-12);
  std::filesystem::remove(path);
}
