#pragma once

#include <ndmc/pdmp/bps.hpp>

#include <queue>

namespace ndmc {

struct LocalBpsOptions {
  /// Redraw every factor clock after each event instead of only the
  /// factors sharing a coordinate with the fired one.
  bool full_redraw = false;
};

struct LocalBpsResult {
  PdmpTrajectory trajectory;
  long clock_draws = 0;     // candidate draws over all factors
  long factor_events = 0;   // accepted factor reflections
};

/// Local BPS over the model's factors. Each factor has its own clock with
/// rate max{0, <v_f, grad U_f(x_f + v_f t)>}; the earliest fires and
/// reflects only its velocity block. Clocks of factors that share no
/// coordinate with the fired one keep their scheduled times.
inline LocalBpsResult local_bps_run(const TargetModel& model, const PdmpOptions& opt, double phi, const Vec& x0,
                                    const Vec& v0, Rng& rng, const LocalBpsOptions& lopt = {}) {
  const auto* fs = model.factors();
  if (fs == nullptr) throw UnsupportedOperation("local_bps_run: model has no factors");
  if (model.domain() != nullptr) throw UnsupportedOperation("local_bps_run: constrained domains not supported");
  require(opt.horizon > 0.0, "local_bps_run: horizon must be positive");
  require(phi > 0.0, "local_bps_run: refreshment rate must be positive");
  const Index n = model.dim();
  if (x0.size() != n || v0.size() != n) throw InvalidArgument("local_bps_run: dimension mismatch");
  const std::size_t nf = fs->size();

  std::vector<ClockRule> rules;
  rules.reserve(nf);
  for (const Factor& f : *fs) {
    if (f.exact_rate) {
      rules.emplace_back(ExactClock{f.exact_rate});
    } else if (f.rate_bound) {
      rules.emplace_back(*f.rate_bound);
    } else {
      rules.emplace_back(NumericClock{});
    }
  }

  // factors sharing at least one coordinate, including the factor itself
  std::vector<std::vector<std::size_t>> by_coord(static_cast<std::size_t>(n));
  for (std::size_t f = 0; f < nf; ++f)
    for (Index c : (*fs)[f].coords) by_coord[static_cast<std::size_t>(c)].push_back(f);
  std::vector<std::vector<std::size_t>> neighbours(nf);
  {
    std::vector<std::size_t> mark(nf, nf);
    for (std::size_t f = 0; f < nf; ++f) {
      for (Index c : (*fs)[f].coords)
        for (std::size_t g : by_coord[static_cast<std::size_t>(c)])
          if (mark[g] != f) {
            mark[g] = f;
            neighbours[f].push_back(g);
          }
    }
  }

  TrajectoryRecorder rec(x0, v0, Flow{}, opt.trajectory());
  ThinningStats stats;
  LocalBpsResult out;
  const Stopwatch watch;

  struct Entry {
    double time;
    std::size_t factor;
    std::uint64_t version;
    Candidate cand;
    bool operator>(const Entry& o) const { return time > o.time; }
  };
  std::priority_queue<Entry, std::vector<Entry>, std::greater<>> queue;
  std::vector<std::uint64_t> version(nf, 0);

  auto local_state = [&](std::size_t f, double t) {
    const auto& cs = (*fs)[f].coords;
    Vec xf(static_cast<Index>(cs.size())), vf(static_cast<Index>(cs.size()));
    for (std::size_t k = 0; k < cs.size(); ++k) {
      xf[static_cast<Index>(k)] = rec.position(cs[k], t);
      vf[static_cast<Index>(k)] = rec.velocity(cs[k], t);
    }
    return std::make_pair(xf, vf);
  };
  auto factor_rate = [&](std::size_t f, const Vec& xf, const Vec& vf, double u) {
    Vec g;
    (*fs)[f].gradient(xf + u * vf, g);
    return std::max(0.0, vf.dot(g));
  };

  auto draw = [&](std::size_t f, double now) {
    const auto st = local_state(f, now);
    const RateFn rate = [&](double u) { return factor_rate(f, st.first, st.second, u); };
    const StateFn state_at = [&](double u) { return std::make_pair(Vec(st.first + u * st.second), st.second); };
    const Candidate c = next_candidate(rules[f], rate, state_at, opt.horizon - now, rng);
    ++out.clock_draws;
    ++version[f];
    if (std::isfinite(c.t)) queue.push({now + c.t, f, version[f], c});
  };
  auto draw_all = [&](double now) {
    for (std::size_t f = 0; f < nf; ++f) draw(f, now);
  };

  std::exponential_distribution<double> refresh(phi);
  double t = 0.0, next_refresh = refresh(rng), end = opt.horizon;
  draw_all(0.0);

  while (true) {
    while (!queue.empty() && queue.top().version != version[queue.top().factor]) queue.pop();
    const double t_fac = queue.empty() ? kInf : queue.top().time;
    const double t_next = std::min(t_fac, next_refresh);
    if (t_next >= opt.horizon) break;
    t = t_next;

    if (next_refresh <= t_fac) {
      std::normal_distribution<double> normal;
      rec.begin_event(t, EventKind::Refresh, -1);
      for (Index i = 0; i < n; ++i) rec.set_velocity(i, t, normal(rng));
      draw_all(t);
      next_refresh = t + refresh(rng);
    } else {
      const Entry e = queue.top();
      queue.pop();
      const std::size_t f = e.factor;
      bool fire = e.cand.type == Candidate::Fire;
      if (e.cand.type == Candidate::Renewal) ++stats.lookahead_renewals;
      const auto st = local_state(f, t);
      Vec g;
      if (e.cand.type != Candidate::Renewal) {
        (*fs)[f].gradient(st.first, g);
        if (e.cand.type == Candidate::Proposal)
          fire = thinning_accept(std::max(0.0, st.second.dot(g)), e.cand.bound, rng, stats, static_cast<long>(f), t);
      }
      if (fire) {
        const Vec vf = bps_reflect(st.second, g);
        const auto& cs = (*fs)[f].coords;
        rec.begin_event(t, EventKind::Bounce, static_cast<Index>(f));
        for (std::size_t k = 0; k < cs.size(); ++k) rec.set_velocity(cs[k], t, vf[static_cast<Index>(k)]);
        ++out.factor_events;
        if (lopt.full_redraw) {
          draw_all(t);
        } else {
          for (std::size_t g2 : neighbours[f]) draw(g2, t);
        }
      } else {
        draw(f, t);
      }
    }
    if (opt.time_budget < kInf && watch.seconds() >= opt.time_budget) {
      end = t;
      break;
    }
  }
  out.trajectory = rec.finish(end, stats);
  out.trajectory.wall_time = watch.seconds();
  return out;
}

}  // namespace ndmc
