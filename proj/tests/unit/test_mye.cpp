#include <ndmc/mye.hpp>

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace ndmc;

namespace {

double abs_envelope(double x, double lambda) {
  Vec xv = Vec::Constant(1, x);
  const auto p = prox_l1(xv, lambda, Vec::Ones(1));
  return mye_value([](const Vec& u) { return std::abs(u[0]); }, p, xv, lambda);
}

double envelope_by_grid(double x, double lambda) {
  return oracle::grid_min([&](double u) { return std::abs(u) + (x - u) * (x - u) / (2 * lambda); }, -3.0, 3.0,
                          1e-5);
}

}  // namespace

TEST(MyeValue, HuberBranches) {
  EXPECT_NEAR(envelope_by_grid(1.0, 0.25), 0.875, 1e-9);
  EXPECT_NEAR(envelope_by_grid(0.1, 0.25), 0.02, 1e-9);
  EXPECT_NEAR(abs_envelope(1.0, 0.25), 0.875, 1e-15);
  EXPECT_NEAR(abs_envelope(0.1, 0.25), 0.02, 1e-15);
}

TEST(MyeValue, MinimizerIsFixed) {
  // g(u) = |u - 0.5| style check using weighted L1 minimizer at 0
  EXPECT_EQ(abs_envelope(0.0, 0.7), 0.0);
}

TEST(MyeGradient, SaturatedAndQuadraticBranches) {
  for (double x : {2.0, 0.1}) {
    Vec xv = Vec::Constant(1, x);
    const auto g = mye_gradient(xv, 0.25, prox_l1(xv, 0.25, Vec::Ones(1)));
    const double fd = (abs_envelope(x + 1e-6, 0.25) - abs_envelope(x - 1e-6, 0.25)) / 2e-6;
    EXPECT_NEAR(g.grad[0], fd, 1e-6);
    EXPECT_DOUBLE_EQ(g.lipschitz_bound, 4.0);
  }
  Vec two = Vec::Constant(1, 2.0), small = Vec::Constant(1, 0.1);
  EXPECT_DOUBLE_EQ(mye_gradient(two, 0.25, prox_l1(two, 0.25, Vec::Ones(1))).grad[0], 1.0);
  EXPECT_NEAR(mye_gradient(small, 0.25, prox_l1(small, 0.25, Vec::Ones(1))).grad[0], 0.4, 1e-15);
  Vec zero = Vec::Zero(1);
  EXPECT_EQ(mye_gradient(zero, 0.25, prox_l1(zero, 0.25, Vec::Ones(1))).grad[0], 0.0);
}

TEST(MyeErrorBound, Values) {
  EXPECT_DOUBLE_EQ(mye_error_bound(1.0, 0.25).sup_gap, 0.125);
  const auto zero = mye_error_bound(0.0, 0.3);
  EXPECT_EQ(zero.sup_gap, 0.0);
  EXPECT_EQ(zero.expectation_factor, 0.0);
  // exp(1e-5) - 1 by its Taylor series in extended precision
  const long double t = 1e-5L;
  const long double series = t + t * t / 2 + t * t * t / 6 + t * t * t * t / 24;
  EXPECT_NEAR(mye_error_bound(1.0, 1e-5).expectation_factor, static_cast<double>(series), 1e-20);
  EXPECT_NEAR(mye_error_bound(1.0, 1e-5).expectation_factor, 1.0000050e-5, 1e-12);
  EXPECT_THROW(mye_error_bound(-1.0, 1.0), InvalidArgument);
}

TEST(MyeProperties, EnvelopeSandwichOnWeightedL1) {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> normal(0.0, 3.0);
  std::uniform_real_distribution<double> unif(0.1, 2.0);
  const Index n = 5;
  Vec w(n);
  for (Index i = 0; i < n; ++i) w[i] = unif(rng);
  const double L = w.norm();  // Lipschitz constant of x -> w.|x|
  const double lambda = 0.4;
  const auto bound = mye_error_bound(L, lambda);
  auto g = [&](const Vec& u) { return w.dot(u.cwiseAbs()); };
  for (int rep = 0; rep < 1000; ++rep) {
    Vec x(n);
    for (Index i = 0; i < n; ++i) x[i] = normal(rng);
    const double env = mye_value(g, prox_l1(x, lambda, w), x, lambda);
    const double gap = g(x) - env;
    EXPECT_GE(gap, -1e-12);
    EXPECT_LE(gap, bound.sup_gap + 1e-12);
  }
}

TEST(MyeProperties, GradientNormMonotoneInLambda) {
  std::mt19937_64 rng(29);
  std::normal_distribution<double> normal(0.0, 2.0);
  std::uniform_real_distribution<double> unif(0.05, 3.0);
  for (int rep = 0; rep < 1000; ++rep) {
    const Index n = 1 + rep % 4;
    Vec x(n), w(n);
    for (Index i = 0; i < n; ++i) {
      x[i] = normal(rng);
      w[i] = unif(rng);
    }
    double l1 = unif(rng), l2 = unif(rng);
    if (l1 > l2) std::swap(l1, l2);
    const double n1 = mye_gradient(x, l1, prox_l1(x, l1, w)).grad.norm();
    const double n2 = mye_gradient(x, l2, prox_l1(x, l2, w)).grad.norm();
    EXPECT_GE(n1, n2 - 1e-12);
  }
}

TEST(MyeProperties, FiniteDifferencesAwayFromKinks) {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> normal(0.0, 2.0);
  const Vec w = (Vec(3) << 0.5, 1.0, 2.0).finished();
  const double lambda = 0.3;
  auto g = [&](const Vec& u) { return w.dot(u.cwiseAbs()); };
  auto env = [&](const Vec& u) { return mye_value(g, prox_l1(u, lambda, w), u, lambda); };
  int checked = 0;
  while (checked < 200) {
    Vec x(3);
    for (Index i = 0; i < 3; ++i) x[i] = normal(rng);
    // skip points within 1e-4 of the branch switch |x_i| = lambda w_i
    if (((x.cwiseAbs() - lambda * w).array().abs() < 1e-4).any()) continue;
    const Vec fd = oracle::central_difference(env, x, 1e-6);
    const Vec an = mye_gradient(x, lambda, prox_l1(x, lambda, w)).grad;
    EXPECT_LT((fd - an).cwiseAbs().maxCoeff(), 1e-5);
    ++checked;
  }
}

TEST(MyeProperties, ExpectationBoundOnLaplaceByQuadrature) {
  for (double lambda : {0.25, 1.0}) {
    auto huber = [&](double x) {
      return std::abs(x) <= lambda ? x * x / (2 * lambda) : std::abs(x) - lambda / 2;
    };
    const double z = oracle::integrate_real_line([&](double x) { return std::exp(-huber(x)); });
    const double e_smooth = oracle::integrate_real_line([&](double x) { return x * x * std::exp(-huber(x)); }) / z;
    const double e_exact = 2.0;  // E x^2 under Laplace(1)
    const double lhs = std::abs(e_smooth - e_exact);
    const double rhs = mye_error_bound(1.0, lambda).expectation_factor * e_exact;
    EXPECT_LE(lhs, rhs) << "lambda=" << lambda;
    EXPECT_GT(lhs, 0.0);
  }
}
