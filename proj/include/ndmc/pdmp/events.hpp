#pragma once

// First event time of an inhomogeneous Poisson process with rate rho(t),
// t measured from the current state: by thinning against a dominating
// bound, by closed-form inversion, or by numerical inversion of the
// integrated rate.

#include <ndmc/langevin.hpp>
#include <ndmc/rates.hpp>


#include <random>

namespace ndmc {

struct ThinningStats {
  long proposals = 0;
  long accepted = 0;
  long bound_violations = 0;
  long lookahead_renewals = 0;

  ThinningStats& operator+=(const ThinningStats& o) {
    proposals += o.proposals;
    accepted += o.accepted;
    bound_violations += o.bound_violations;
    lookahead_renewals += o.lookahead_renewals;
    return *this;
  }
  double acceptance() const { return proposals == 0 ? 0.0 : static_cast<double>(accepted) / proposals; }
};

inline double exp1(Rng& rng) {
  std::exponential_distribution<double> e(1.0);
  return e(rng);
}

/// Time until the integrated rate of `fam` reaches `e` (a unit exponential
/// draw); kInf when it never does.
inline double invert_rate(const RateFamily& fam, double e) {
  if (const auto* pc = std::get_if<PiecewiseConstantRate>(&fam)) {
    if (pc->rate <= 0.0) return kInf;
    return std::max(pc->zero_until, 0.0) + e / pc->rate;
  }
  const auto& lin = std::get<LinearRate>(fam);
  const double a = lin.a, b = lin.b;
  if (b == 0.0) return a > 0.0 ? e / a : kInf;
  if (b > 0.0) {
    if (a >= 0.0) return 2.0 * e / (a + std::sqrt(a * a + 2.0 * b * e));
    return -a / b + std::sqrt(2.0 * e / b);
  }
  // decreasing rate: total mass a^2 / (2|b|)
  if (a <= 0.0 || e >= a * a / (-2.0 * b)) return kInf;
  return 2.0 * e / (a + std::sqrt(a * a + 2.0 * b * e));
}

inline double inversion_event(const RateFamily& fam, Rng& rng) { return invert_rate(fam, exp1(rng)); }

/// Bound on a look-ahead window [s, s + theta] from the strategy. `payload`
/// strategies read the flow state at s through `state_at`; the endpoint
/// strategy evaluates the rate at both ends.
inline LinearBound window_bound(const BoundStrategy& b, double s, double theta,
                                const std::function<double(double)>& rate,
                                const std::function<std::pair<Vec, Vec>(double)>& state_at) {
  LinearBound lb;
  if (b.kind == BoundKind::LogConcaveEndpoint) {
    lb.a = std::max(rate(s), rate(s + theta));
    lb.b = 0.0;
  } else {
    if (!b.payload) throw InvalidArgument("BoundStrategy: payload required for constant/linear bounds");
    const auto st = state_at(s);
    lb = b.payload(st.first, st.second, theta);
    if (b.kind == BoundKind::Constant) lb.b = 0.0;
  }
  if (lb.b < 0.0) {
    lb.a = std::max(lb.a, lb.a + lb.b * theta);
    lb.b = 0.0;
  }
  lb.a = std::max(lb.a, 0.0);
  const double peak = lb.a + lb.b * theta;
  lb.a += b.safety_gamma >= 0.0 ? b.safety_gamma : 1e-9 * peak;
  return lb;
}

/// Outcome of one thinning proposal inside the current window.
struct Proposal {
  double u = kInf;       // offset from the window start
  bool renewal = false;  // u exceeded the window: renew at s + theta
  double bound = 0.0;    // bound value at u
};

inline Proposal propose(const LinearBound& lb, double theta, Rng& rng) {
  Proposal p;
  const double u = invert_rate(LinearRate{lb.a, lb.b}, exp1(rng));
  if (u > theta) {
    p.u = theta;
    p.renewal = true;
  } else {
    p.u = u;
    p.bound = lb.at(u);
  }
  return p;
}

/// Checks rho(tau) against the bound and accepts with probability
/// rho/bound. Violations are counted and throw BoundViolation.
inline bool thinning_accept(double rho, double bound, Rng& rng, ThinningStats& stats, long coordinate,
                            double time) {
  ++stats.proposals;
  if (rho > bound) {
    ++stats.bound_violations;
    throw BoundViolation("thinning: rate " + std::to_string(rho) + " exceeds bound " + std::to_string(bound),
                         coordinate, time);
  }
  std::uniform_real_distribution<double> unif;
  if (unif(rng) * bound < rho) {
    ++stats.accepted;
    return true;
  }
  return false;
}

/// Thinning with look-ahead windows of length theta. Returns the elapsed
/// time to the first accepted event, or kInf once the elapsed time passes
/// `horizon`.
inline double thinning_event(const std::function<double(double)>& rate, const BoundStrategy& bound,
                             const std::function<std::pair<Vec, Vec>(double)>& state_at, Rng& rng,
                             ThinningStats& stats, double horizon = kInf) {
  const double theta = bound.lookahead_theta;
  require(theta > 0.0, "thinning_event: look-ahead must be positive");
  double s = 0.0;
  LinearBound lb = window_bound(bound, s, theta, rate, state_at);
  double used = 0.0;  // offset inside the current window
  while (s + used <= horizon) {
    // remaining part of the window [s + used, s + theta]
    LinearBound rest{lb.at(used), lb.b};
    const Proposal p = propose(rest, theta - used, rng);
    if (p.renewal) {
      ++stats.lookahead_renewals;
      s += theta;
      used = 0.0;
      if (s > horizon) break;
      lb = window_bound(bound, s, theta, rate, state_at);
      continue;
    }
    used += p.u;
    const double t = s + used;
    if (t > horizon) break;
    if (thinning_accept(rate(t), p.bound, rng, stats, -1, t)) return t;
  }
  return kInf;
}

namespace detail {

/// Integral of the parabola through (0, f0), (1/2, f1), (1, f2) over [0, s],
/// in units of the interval width.
inline double parabola_mass(double f0, double f1, double f2, double s) {
  const double c1 = -3.0 * f0 + 4.0 * f1 - f2, c2 = 2.0 * f0 - 4.0 * f1 + 2.0 * f2;
  return s * (f0 + s * (c1 / 2.0 + s * c2 / 3.0));
}

}  // namespace detail

/// Numerical inversion: walks the rate over consecutive steps with adaptive
/// Simpson quadrature, leaves in time order, until the integral reaches `e`;
/// the crossing is then solved on the last leaf's interpolating parabola.
/// `clk.tol` is an absolute error target per leaf, so isolated jumps in the
/// rate cost a bounded number of evaluations. kInf past `horizon`.
inline double invert_numeric(const std::function<double(double)>& rate, double e, const NumericClock& clk,
                             double horizon) {
  require(clk.step > 0.0 && clk.tol > 0.0, "NumericClock: step and tol must be positive");
  constexpr int kMaxDepth = 32;
  struct Seg {
    double a, b, fa, fm, fb, whole;
    int depth;
  };
  auto simpson = [](double a, double b, double fa, double fm, double fb) { return (b - a) * (fa + 4 * fm + fb) / 6; };
  // Both ends of the clock window are taken as one-sided limits: a window
  // often starts or stops on a wall of an open domain.
  const double nudge = 1e-12 * std::max(1.0, std::abs(horizon) < kInf ? std::abs(horizon) : 1.0);
  double t = 0.0, acc = 0.0, f_t = rate(std::min(nudge, 0.5 * std::min(clk.step, horizon)));
  std::vector<Seg> stack;
  while (t < horizon) {
    const double t1 = std::min(t + clk.step, horizon);
    const double t_end = t1 < horizon ? t1 : t1 - nudge;
    const double fm0 = rate(0.5 * (t + t1)), f1 = rate(std::max(t_end, 0.5 * (t + t1)));
    stack.assign(1, Seg{t, t1, f_t, fm0, f1, simpson(t, t1, f_t, fm0, f1), 0});
    while (!stack.empty()) {
      const Seg s = stack.back();
      stack.pop_back();
      const double m = 0.5 * (s.a + s.b);
      const double flm = rate(0.5 * (s.a + m)), frm = rate(0.5 * (m + s.b));
      const double left = simpson(s.a, m, s.fa, flm, s.fm), right = simpson(m, s.b, s.fm, frm, s.fb);
      if (s.depth < kMaxDepth && std::abs(left + right - s.whole) > 15.0 * clk.tol) {
        stack.push_back(Seg{m, s.b, s.fm, frm, s.fb, right, s.depth + 1});
        stack.push_back(Seg{s.a, m, s.fa, flm, s.fm, left, s.depth + 1});
        continue;
      }
      const double halves[2][5] = {{s.a, m, s.fa, flm, s.fm}, {m, s.b, s.fm, frm, s.fb}};
      const double mass[2] = {left, right};
      for (int h = 0; h < 2; ++h) {
        if (acc + mass[h] < e) {
          acc += mass[h];
          continue;
        }
        const auto& q = halves[h];
        const double w = q[1] - q[0], target = (e - acc) / w;
        double lo = 0.0, hi = 1.0;
        for (int k = 0; k < 200 && (hi - lo) * w > 1e-3 * clk.tol; ++k) {
          const double mid = 0.5 * (lo + hi);
          (detail::parabola_mass(q[2], q[3], q[4], mid) < target ? lo : hi) = mid;
        }
        return q[0] + 0.5 * (lo + hi) * w;
      }
    }
    t = t1;
    f_t = f1;
  }
  return kInf;
}

inline double numeric_inversion_event(const std::function<double(double)>& rate, const NumericClock& clk,
                                      Rng& rng, double horizon) {
  return invert_numeric(rate, exp1(rng), clk, horizon);
}

}  // namespace ndmc
