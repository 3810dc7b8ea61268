#pragma once

#include <ndmc/pdmp/common.hpp>

namespace ndmc {

/// max{0, <v, grad U(x + v t)>}, with grad U = 0 on the kink set.
inline double bps_rate(const PdmpState& s, const TargetModel& model, double t) {
  Vec g;
  model.gradient(s.x + t * s.v, g);
  return std::max(0.0, s.v.dot(g));
}

/// Reflection of v in the hyperplane orthogonal to grad.
inline Vec bps_reflect(const Vec& v, const Vec& grad) {
  const double g2 = grad.squaredNorm();
  if (g2 == 0.0) throw InvariantViolation("bps_reflect: zero gradient");
  return v - (2.0 * v.dot(grad) / g2) * grad;
}

/// Global BPS with refreshment at rate phi. `clock` defaults to the model's
/// bps_clock().
inline PdmpTrajectory bps_run(const TargetModel& model, const PdmpOptions& opt, double phi,
                              std::optional<ClockRule> clock, const Vec& x0, const Vec& v0, Rng& rng) {
  const Index n = model.dim();
  require(opt.horizon > 0.0, "bps_run: horizon must be positive");
  require(phi > 0.0, "bps_run: refreshment rate must be positive");
  if (x0.size() != n || v0.size() != n) throw InvalidArgument("bps_run: dimension mismatch");
  if (!clock) clock = model.bps_clock();
  if (!clock) throw UnsupportedOperation("bps_run: model '" + model.name() + "' has no BPS clock");

  const Domain* dom = model.domain();
  TrajectoryRecorder rec(x0, v0, Flow{}, opt.trajectory());
  ThinningStats stats;
  PdmpState st{x0, v0, 0.0};
  const Stopwatch watch;
  std::exponential_distribution<double> refresh(phi);
  double end = opt.horizon;
  Vec g;

  auto record_all = [&](EventKind kind) {
    rec.begin_event(st.t, kind, -1);
    for (Index i = 0; i < n; ++i) rec.set(i, st.t, st.x[i], st.v[i]);
  };

  while (true) {
    const auto hit = boundary_hit(dom, st.x, st.v);
    const double cap = std::min(opt.horizon - st.t, hit.first);
    const RateFn rate = [&](double u) { return bps_rate(st, model, u); };
    const StateFn state_at = [&](double u) { return std::make_pair(Vec(st.x + u * st.v), st.v); };
    const Candidate c = next_candidate(*clock, rate, state_at, cap, rng);
    const double t_ref = refresh(rng);
    const double tau = std::min({c.t, t_ref, hit.first});
    if (st.t + tau >= opt.horizon || !std::isfinite(tau)) break;

    st.x += tau * st.v;
    st.t += tau;
    if (tau == hit.first) {
      const Index i = hit.second;
      apply_boundary(*dom, i, st.x, st.v);
      rec.begin_event(st.t, EventKind::Boundary, i);
      rec.set(i, st.t, st.x[i], st.v[i]);
    } else if (tau == t_ref) {
      std::normal_distribution<double> normal;
      for (Index i = 0; i < n; ++i) st.v[i] = normal(rng);
      record_all(EventKind::Refresh);
    } else {
      bool fire = c.type == Candidate::Fire;
      if (c.type == Candidate::Renewal) {
        ++stats.lookahead_renewals;
      } else {
        model.gradient(st.x, g);
        if (c.type == Candidate::Proposal)
          fire = thinning_accept(std::max(0.0, st.v.dot(g)), c.bound, rng, stats, -1, st.t);
        if (fire) {
          st.v = bps_reflect(st.v, g);
          record_all(EventKind::Bounce);
        }
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
