#pragma once

#include <ndmc/pdmp/bps.hpp>

namespace ndmc {

/// Flow of x' = v, v' = -(x - mean)/sigma^2 per coordinate, over time t.
inline void harmonic_flow(const GaussianComponent& gc, const Vec& x0, const Vec& v0, double t, Vec& x, Vec& v) {
  const Index n = x0.size();
  x.resize(n);
  v.resize(n);
  for (Index i = 0; i < n; ++i) {
    const double s = std::sqrt(gc.variances[i]), w = t / s, c = std::cos(w), sn = std::sin(w);
    const double d = x0[i] - gc.mean[i];
    x[i] = gc.mean[i] + d * c + s * v0[i] * sn;
    v[i] = -d / s * sn + v0[i] * c;
  }
}

/// V(x) + |v|^2/2, conserved along harmonic_flow.
inline double harmonic_energy(const GaussianComponent& gc, const Vec& x, const Vec& v) {
  return 0.5 * ((x - gc.mean).array().square() / gc.variances.array()).sum() + 0.5 * v.squaredNorm();
}

/// Hamiltonian BPS: harmonic flow of the model's Gaussian component V
/// between events; bounces use the remainder U - V. Without an explicit
/// clock, thinning uses the constant bound sqrt(2 H) * G, where H is the
/// conserved energy and G the declared bound on |grad(U - V)|.
inline PdmpTrajectory hbps_run(const TargetModel& model, const PdmpOptions& opt, double phi,
                               std::optional<ClockRule> clock, const Vec& x0, const Vec& v0, Rng& rng) {
  const GaussianComponent* gc = model.gaussian_component();
  if (gc == nullptr || !gc->remainder_gradient)
    throw UnsupportedOperation("hbps_run: model '" + model.name() + "' has no Gaussian split");
  require(opt.horizon > 0.0, "hbps_run: horizon must be positive");
  require(phi > 0.0, "hbps_run: refreshment rate must be positive");
  const Index n = model.dim();
  if (x0.size() != n || v0.size() != n) throw InvalidArgument("hbps_run: dimension mismatch");
  if (!clock) {
    if (!std::isfinite(gc->remainder_gradient_bound))
      throw UnsupportedOperation("hbps_run: no clock given and no finite remainder gradient bound");
    BoundStrategy b;
    b.kind = BoundKind::Constant;
    const double G = gc->remainder_gradient_bound;
    b.payload = [gc, G](const Vec& x, const Vec& v, double) {
      return LinearBound{std::sqrt(2.0 * harmonic_energy(*gc, x, v)) * G, 0.0};
    };
    b.lookahead_theta = opt.horizon;
    clock = b;
  }

  Flow flow{FlowKind::Harmonic, gc->mean, gc->variances.cwiseSqrt()};
  TrajectoryRecorder rec(x0, v0, flow, opt.trajectory());
  ThinningStats stats;
  PdmpState st{x0, v0, 0.0};
  const Stopwatch watch;
  std::exponential_distribution<double> refresh(phi);
  double end = opt.horizon;
  Vec g, xt, vt;

  auto rate_at = [&](double u) {
    harmonic_flow(*gc, st.x, st.v, u, xt, vt);
    gc->remainder_gradient(xt, g);
    return std::max(0.0, vt.dot(g));
  };
  auto record_all = [&](EventKind kind) {
    rec.begin_event(st.t, kind, -1);
    for (Index i = 0; i < n; ++i) rec.set(i, st.t, st.x[i], st.v[i]);
  };

  while (true) {
    const RateFn rate = rate_at;
    const StateFn state_at = [&](double u) {
      Vec a, b;
      harmonic_flow(*gc, st.x, st.v, u, a, b);
      return std::make_pair(a, b);
    };
    const Candidate c = next_candidate(*clock, rate, state_at, opt.horizon - st.t, rng);
    const double t_ref = refresh(rng);
    const double tau = std::min(c.t, t_ref);
    if (st.t + tau >= opt.horizon || !std::isfinite(tau)) break;

    harmonic_flow(*gc, st.x, st.v, tau, xt, vt);
    st.x = xt;
    st.v = vt;
    st.t += tau;
    if (tau == t_ref) {
      std::normal_distribution<double> normal;
      for (Index i = 0; i < n; ++i) st.v[i] = normal(rng);
      record_all(EventKind::Refresh);
    } else if (c.type == Candidate::Renewal) {
      ++stats.lookahead_renewals;
    } else {
      gc->remainder_gradient(st.x, g);
      bool fire = c.type == Candidate::Fire;
      if (c.type == Candidate::Proposal)
        fire = thinning_accept(std::max(0.0, st.v.dot(g)), c.bound, rng, stats, -1, st.t);
      if (fire) {
        st.v = bps_reflect(st.v, g);
        record_all(EventKind::Bounce);
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
