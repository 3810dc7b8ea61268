#pragma once

// Pieces shared by the PDMP samplers: run options, competing-clock
// candidates and domain boundaries.

#include <ndmc/model.hpp>
#include <ndmc/pdmp/trajectory.hpp>

#include <chrono>

namespace ndmc {

struct PdmpState {
  Vec x;
  Vec v;
  double t = 0.0;
};

struct PdmpOptions {
  double horizon = 0.0;
  double grid_dt = 0.0;
  bool record_events = true;
  int n_batches = 50;
  double time_budget = kInf;  // seconds; stops at the next event boundary
  std::size_t max_events = 100000000;

  TrajectoryOptions trajectory() const {
    TrajectoryOptions t;
    t.horizon = horizon;
    t.grid_dt = grid_dt;
    t.record_events = record_events;
    t.n_batches = n_batches;
    t.max_events = max_events;
    return t;
  }
};

/// Next proposed time of one clock, as an offset from the current time.
struct Candidate {
  enum Type { Fire, Proposal, Renewal };
  double t = kInf;
  Type type = Fire;
  double bound = 0.0;
};

using RateFn = std::function<double(double)>;
using StateFn = std::function<std::pair<Vec, Vec>(double)>;

/// Draws the next candidate of a clock. Exact and numeric clocks return a
/// true event time; thinning clocks return a proposal (to be accepted with
/// probability rate/bound) or the end of the look-ahead window.
inline Candidate next_candidate(const ClockRule& rule, const RateFn& rate, const StateFn& state_at, double cap,
                                Rng& rng) {
  Candidate c;
  if (const auto* ex = std::get_if<ExactClock>(&rule)) {
    const auto st = state_at(0.0);
    c.t = invert_rate(ex->family(st.first, st.second), exp1(rng));
  } else if (const auto* num = std::get_if<NumericClock>(&rule)) {
    c.t = invert_numeric(rate, exp1(rng), *num, cap);
  } else {
    const auto& b = std::get<BoundStrategy>(rule);
    const LinearBound lb = window_bound(b, 0.0, b.lookahead_theta, rate, state_at);
    const Proposal p = propose(lb, b.lookahead_theta, rng);
    c.t = p.u;
    c.type = p.renewal ? Candidate::Renewal : Candidate::Proposal;
    c.bound = p.bound;
  }
  return c;
}

/// Earliest time at which a linear flow from (x, v) reaches a wall or the
/// end of a periodic interval; coordinate -1 when none is reached.
inline std::pair<double, Index> boundary_hit(const Domain* dom, const Vec& x, const Vec& v) {
  std::pair<double, Index> best{kInf, -1};
  if (dom == nullptr) return best;
  for (Index i = 0; i < x.size(); ++i) {
    double t = kInf;
    if (dom->is_periodic(i)) {
      if (v[i] > 0.0) t = (dom->period - x[i]) / v[i];
      else if (v[i] < 0.0) t = -x[i] / v[i];
    } else {
      if (v[i] < 0.0 && dom->lower.size() > i && std::isfinite(dom->lower[i])) t = (dom->lower[i] - x[i]) / v[i];
      if (v[i] > 0.0 && dom->upper.size() > i && std::isfinite(dom->upper[i])) t = (dom->upper[i] - x[i]) / v[i];
    }
    t = std::max(t, 0.0);
    if (t < best.first) best = {t, i};
  }
  return best;
}

/// Applies a boundary event on coordinate i: wrap for periodic coordinates,
/// velocity reversal at walls.
inline void apply_boundary(const Domain& dom, Index i, Vec& x, Vec& v) {
  if (dom.is_periodic(i)) {
    x[i] = v[i] > 0.0 ? 0.0 : dom.period;
  } else {
    if (v[i] < 0.0 && dom.lower.size() > i) x[i] = dom.lower[i];
    if (v[i] > 0.0 && dom.upper.size() > i) x[i] = dom.upper[i];
    v[i] = -v[i];
  }
}

class Stopwatch {
 public:
  Stopwatch() : start_(std::chrono::steady_clock::now()) {}
  double seconds() const {
    const std::chrono::duration<double> d = std::chrono::steady_clock::now() - start_;
    return d.count();
  }

 private:
  std::chrono::steady_clock::time_point start_;
};

}  // namespace ndmc
