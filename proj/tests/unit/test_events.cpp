#include <ndmc/diagnostics.hpp>
#include <ndmc/pdmp/common.hpp>
#include <ndmc/pdmp/events.hpp>

#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace ndmc;

namespace {

double linear_mass(double a, double b, double t) {
  // integral of max(0, a + b s) over [0, t]
  return oracle::integrate([&](double s) { return std::max(0.0, a + b * s); }, 0.0, t);
}

BoundStrategy linear_bound_for(double a, double b, double theta) {
  BoundStrategy bs;
  bs.kind = BoundKind::LinearInT;
  // the state carries the window start time in its only coordinate
  bs.payload = [a, b](const Vec& s, const Vec&, double) { return LinearBound{std::max(a + b * s[0], 0.0), b}; };
  bs.lookahead_theta = theta;
  return bs;
}

const StateFn kNoState = [](double t) { return std::make_pair(Vec(Vec::Constant(1, t)), Vec()); };

}  // namespace

TEST(InvertRate, IntegratedRateHitsTarget) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  std::exponential_distribution<double> ex(1.0);
  for (int k = 0; k < 200; ++k) {
    const double a = u(rng), b = std::abs(u(rng)) + 0.05, e = ex(rng);
    const double t = invert_rate(LinearRate{a, b}, e);
    ASSERT_TRUE(std::isfinite(t));
    EXPECT_NEAR(linear_mass(a, b, t), e, 1e-8 * std::max(1.0, e));
  }
}

TEST(InvertRate, ConstantAndZero) {
  EXPECT_DOUBLE_EQ(invert_rate(LinearRate{2.0, 0.0}, 1.0), 0.5);
  EXPECT_EQ(invert_rate(LinearRate{0.0, 0.0}, 1.0), kInf);
  EXPECT_EQ(invert_rate(LinearRate{-1.0, 0.0}, 1.0), kInf);
}

TEST(InvertRate, DecreasingRateFiniteMass) {
  // mass of max(0, 1 - t) is 1/2
  EXPECT_EQ(invert_rate(LinearRate{1.0, -1.0}, 0.6), kInf);
  const double t = invert_rate(LinearRate{1.0, -1.0}, 0.3);
  EXPECT_NEAR(t - t * t / 2, 0.3, 1e-14);
}

TEST(InvertRate, PiecewiseConstantDelay) {
  EXPECT_DOUBLE_EQ(invert_rate(PiecewiseConstantRate{1.5, 2.0}, 1.0), 2.0);
  EXPECT_EQ(invert_rate(PiecewiseConstantRate{0.0, 0.0}, 1.0), kInf);
}

TEST(InvertNumeric, MatchesClosedForm) {
  const double a = -0.7, b = 1.3;
  for (double e : {0.01, 0.5, 1.0, 3.0, 10.0}) {
    const double exact = invert_rate(LinearRate{a, b}, e);
    const double num = invert_numeric([&](double s) { return std::max(0.0, a + b * s); }, e, NumericClock{0.25, 1e-12},
                                      kInf);
    EXPECT_NEAR(num, exact, 1e-9);
  }
}

TEST(InvertNumeric, HorizonCutoff) {
  EXPECT_EQ(invert_numeric([](double) { return 1.0; }, 5.0, NumericClock{}, 2.0), kInf);
}

TEST(Thinning, MatchesInversionDistribution) {
  // Gaussian zig-zag rate at x = -1, v = 1: max(0, -1 + t)
  const double a = -1.0, b = 1.0;
  const int n = 20000;
  std::mt19937_64 r1(2), r2(3);
  std::vector<double> inv, thin;
  ThinningStats stats;
  const auto bound = linear_bound_for(a, b, 0.5);
  const RateFn rate = [&](double t) { return std::max(0.0, a + b * t); };
  for (int k = 0; k < n; ++k) {
    inv.push_back(inversion_event(LinearRate{a, b}, r1));
    thin.push_back(thinning_event(rate, bound, kNoState, r2, stats));
  }
  EXPECT_GT(ks_two_sample(inv, thin).p_value, 0.01);
  EXPECT_EQ(stats.bound_violations, 0);
  EXPECT_GT(stats.lookahead_renewals, 0);
  EXPECT_LT(stats.acceptance(), 1.0);
}

TEST(Thinning, EndpointBoundOnMonotoneRate) {
  const int n = 20000;
  std::mt19937_64 r1(4), r2(5);
  BoundStrategy bs;
  bs.kind = BoundKind::LogConcaveEndpoint;
  bs.lookahead_theta = 0.3;
  const RateFn rate = [](double t) { return 0.5 + t; };
  std::vector<double> inv, thin;
  ThinningStats stats;
  for (int k = 0; k < n; ++k) {
    inv.push_back(inversion_event(LinearRate{0.5, 1.0}, r1));
    thin.push_back(thinning_event(rate, bs, kNoState, r2, stats));
  }
  EXPECT_GT(ks_two_sample(inv, thin).p_value, 0.01);
}

TEST(Thinning, ViolationThrows) {
  std::mt19937_64 rng(6);
  ThinningStats stats;
  BoundStrategy bs;
  bs.kind = BoundKind::Constant;
  bs.payload = [](const Vec&, const Vec&, double) { return LinearBound{0.1, 0.0}; };
  bs.lookahead_theta = 100.0;
  EXPECT_THROW(thinning_event([](double) { return 5.0; }, bs, kNoState, rng, stats), BoundViolation);
  EXPECT_EQ(stats.bound_violations, 1);
}

TEST(Thinning, SafetyMarginAdded) {
  BoundStrategy bs;
  bs.kind = BoundKind::Constant;
  bs.payload = [](const Vec&, const Vec&, double) { return LinearBound{2.0, 0.0}; };
  const auto lb = window_bound(bs, 0.0, 1.0, [](double) { return 0.0; }, kNoState);
  EXPECT_GT(lb.a, 2.0);
  EXPECT_LT(lb.a, 2.0 + 1e-8);
}

TEST(Thinning, HorizonGivesInfinity) {
  std::mt19937_64 rng(7);
  ThinningStats stats;
  const auto bound = linear_bound_for(0.0, 0.0, 1.0);
  EXPECT_EQ(thinning_event([](double) { return 0.0; }, bound, kNoState, rng, stats, 10.0), kInf);
}

TEST(Domain, BoundaryHitAndWrap) {
  Domain dom;
  dom.periodic = {0};
  dom.period = 1.0;
  dom.lower = Eigen::Vector2d(-kInf, 0.0);
  dom.upper = Eigen::Vector2d(kInf, 2.0);
  Vec x = Eigen::Vector2d(0.25, 1.5), v = Eigen::Vector2d(1.0, 1.0);
  const auto h = boundary_hit(&dom, x, v);
  EXPECT_DOUBLE_EQ(h.first, 0.5);
  EXPECT_EQ(h.second, 1);
  x += h.first * v;
  apply_boundary(dom, 1, x, v);
  EXPECT_DOUBLE_EQ(x[1], 2.0);
  EXPECT_DOUBLE_EQ(v[1], -1.0);
  const auto h2 = boundary_hit(&dom, x, v);
  EXPECT_DOUBLE_EQ(h2.first, 0.25);
  EXPECT_EQ(h2.second, 0);
  x += h2.first * v;
  apply_boundary(dom, 0, x, v);
  EXPECT_DOUBLE_EQ(x[0], 0.0);
  EXPECT_DOUBLE_EQ(v[0], 1.0);
}
