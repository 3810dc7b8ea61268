#pragma once

#include <ndmc/pdmp/common.hpp>

namespace ndmc {

/// max{0, v_i * dU/dx_i(x + v t)}; zero at declared kinks.
inline double zz_rate(Index i, const PdmpState& s, const TargetModel& model, double t) {
  const Vec y = s.x + t * s.v;
  return std::max(0.0, s.v[i] * model.partial(i, y));
}

/// Zig-Zag sampler. All n clocks are redrawn from the current state after
/// every event, renewal or rejected proposal; the earliest one decides what
/// happens next. Only the winning coordinate's velocity flips.
inline PdmpTrajectory zz_run(const TargetModel& model, const PdmpOptions& opt, std::vector<ClockRule> clocks,
                             const Vec& x0, const Vec& v0, Rng& rng) {
  const Index n = model.dim();
  require(opt.horizon > 0.0, "zz_run: horizon must be positive");
  if (x0.size() != n || v0.size() != n) throw InvalidArgument("zz_run: dimension mismatch");
  for (Index i = 0; i < n; ++i)
    if (std::abs(v0[i]) != 1.0) throw InvalidArgument("zz_run: velocities must be +1 or -1");
  if (clocks.empty()) clocks = model.zz_clocks();
  if (static_cast<Index>(clocks.size()) != n) throw UnsupportedOperation("zz_run: need one clock per coordinate");

  const Domain* dom = model.domain();
  TrajectoryRecorder rec(x0, v0, Flow{}, opt.trajectory());
  ThinningStats stats;
  PdmpState st{x0, v0, 0.0};
  const Stopwatch watch;
  std::vector<Candidate> cand(static_cast<std::size_t>(n));
  double end = opt.horizon;

  while (true) {
    const auto hit = boundary_hit(dom, st.x, st.v);
    const double cap = std::min(opt.horizon - st.t, hit.first);
    Index best = -1;
    double best_t = kInf;
    for (Index i = 0; i < n; ++i) {
      const RateFn rate = [&, i](double u) { return zz_rate(i, st, model, u); };
      const StateFn state_at = [&](double u) { return std::make_pair(Vec(st.x + u * st.v), st.v); };
      cand[i] = next_candidate(clocks[i], rate, state_at, cap, rng);
      if (cand[i].t < best_t) {
        best_t = cand[i].t;
        best = i;
      }
    }
    const bool boundary = hit.first <= best_t;
    const double tau = boundary ? hit.first : best_t;
    if (st.t + tau >= opt.horizon || (!std::isfinite(tau))) break;

    st.x += tau * st.v;
    st.t += tau;
    if (boundary) {
      const Index i = hit.second;
      apply_boundary(*dom, i, st.x, st.v);
      rec.begin_event(st.t, EventKind::Boundary, i);
      rec.set(i, st.t, st.x[i], st.v[i]);
    } else {
      const Candidate& c = cand[best];
      bool fire = c.type == Candidate::Fire;
      if (c.type == Candidate::Renewal) {
        ++stats.lookahead_renewals;
      } else if (c.type == Candidate::Proposal) {
        const double rho = std::max(0.0, st.v[best] * model.partial(best, st.x));
        fire = thinning_accept(rho, c.bound, rng, stats, static_cast<long>(best), st.t);
      }
      if (fire) {
        st.v[best] = -st.v[best];
        rec.begin_event(st.t, EventKind::Reflect, best);
        rec.set(best, st.t, st.x[best], st.v[best]);
      }
    }
    if (opt.time_budget < kInf && watch.seconds() >= opt.time_budget) {
      end = st.t;
      break;
    }
  }
  PdmpTrajectory tr = rec.finish(end, stats);
  tr.wall_time = watch.seconds();
  return tr;
}

}  // namespace ndmc
