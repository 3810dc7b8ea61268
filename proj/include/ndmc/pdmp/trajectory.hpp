#pragma once

// Event skeleton of a PDMP run and exact time averages along it.
//
// Storage is the initial state plus, per event, the coordinates whose
// velocity or position changed. Each coordinate keeps its own reference
// time, so an event touching k coordinates costs O(k). Time integrals of
// x, |x| and x^2 are accumulated per coordinate while the run proceeds,
// split into equal-length time batches for standard errors.

#include <ndmc/chain.hpp>
#include <ndmc/pdmp/events.hpp>

#include <cstdint>
#include <vector>

namespace ndmc {

enum class EventKind : std::uint8_t { Reflect, Bounce, Refresh, Boundary };

inline const char* to_string(EventKind k) {
  switch (k) {
    case EventKind::Reflect: return "reflect";
    case EventKind::Bounce: return "bounce";
    case EventKind::Refresh: return "refresh";
    case EventKind::Boundary: return "boundary";
  }
  return "?";
}

struct Event {
  double time = 0.0;
  EventKind kind = EventKind::Reflect;
  Index coord = -1;                // flipped coordinate or fired factor; -1 otherwise
  std::uint64_t first_change = 0;  // changes of this event: [first_change, next.first_change)
};

/// New position and velocity of one coordinate at an event.
struct Change {
  Index coord = 0;
  double x = 0.0;
  double v = 0.0;
};

enum class FlowKind { Linear, Harmonic };

/// Deterministic motion between events. Harmonic flow solves
/// x' = v, v' = -(x - mean) / sigma^2 per coordinate.
struct Flow {
  FlowKind kind = FlowKind::Linear;
  Vec mean;
  Vec sigma;

  double position(Index i, double x, double v, double dt) const {
    if (kind == FlowKind::Linear) return x + v * dt;
    const double s = sigma[i], w = dt / s;
    return mean[i] + (x - mean[i]) * std::cos(w) + s * v * std::sin(w);
  }
  double velocity(Index i, double x, double v, double dt) const {
    if (kind == FlowKind::Linear) return v;
    const double s = sigma[i], w = dt / s;
    return -(x - mean[i]) / s * std::sin(w) + v * std::cos(w);
  }
};

enum class Statistic { Coordinate, Abs, Square };

struct TrajectoryOptions {
  double horizon = 0.0;
  bool record_events = true;
  int n_batches = 50;
  double grid_dt = 0.0;  // > 0: keep states at t = 0, dt, 2dt, ...
  std::size_t max_events = 100000000;
};

struct PdmpTrajectory {
  Vec x0, v0;
  double horizon = 0.0;
  Flow flow;
  bool events_recorded = true;
  std::vector<Event> events;
  std::vector<Change> changes;

  // integrals over [0, horizon]; rows are coordinates, columns batches
  Mat batch_x, batch_abs, batch_sq;
  double batch_length = 0.0;
  SampleChain grid;
  double grid_dt = 0.0;

  ThinningStats stats;
  long reflections = 0;  // ZZS flips, BPS bounces, local factor events
  long refreshments = 0;
  long boundary_events = 0;
  double wall_time = 0.0;

  Index dim() const { return x0.size(); }
};

/// Builds a PdmpTrajectory incrementally with lazy per-coordinate state.
class TrajectoryRecorder {
 public:
  TrajectoryRecorder(const Vec& x0, const Vec& v0, Flow flow, const TrajectoryOptions& opt)
      : opt_(opt), x_(x0), v_(v0), t_(Vec::Zero(x0.size())) {
    require(x0.size() == v0.size(), "trajectory: x0 and v0 differ in dimension");
    require(opt.horizon > 0.0, "trajectory: horizon must be positive");
    require(opt.n_batches >= 1, "trajectory: need at least one batch");
    if (flow.kind == FlowKind::Harmonic)
      require(flow.mean.size() == x0.size() && flow.sigma.size() == x0.size() && (flow.sigma.array() > 0).all(),
              "trajectory: harmonic flow needs positive sigma per coordinate");
    tr_.x0 = x0;
    tr_.v0 = v0;
    tr_.horizon = opt.horizon;
    tr_.flow = std::move(flow);
    tr_.events_recorded = opt.record_events;
    const Index n = x0.size();
    tr_.batch_x = Mat::Zero(n, opt.n_batches);
    tr_.batch_abs = Mat::Zero(n, opt.n_batches);
    tr_.batch_sq = Mat::Zero(n, opt.n_batches);
    tr_.batch_length = opt.horizon / opt.n_batches;
    tr_.grid_dt = opt.grid_dt;
    tr_.grid = SampleChain(n);
  }

  Index dim() const { return x_.size(); }
  const Flow& flow() const { return tr_.flow; }

  double position(Index i, double t) const { return tr_.flow.position(i, x_[i], v_[i], t - t_[i]); }
  double velocity(Index i, double t) const { return tr_.flow.velocity(i, x_[i], v_[i], t - t_[i]); }
  Vec positions(double t) const {
    Vec p(dim());
    for (Index i = 0; i < dim(); ++i) p[i] = position(i, t);
    return p;
  }
  Vec velocities(double t) const {
    Vec p(dim());
    for (Index i = 0; i < dim(); ++i) p[i] = velocity(i, t);
    return p;
  }

  /// Emits grid states up to time t; call before changing anything at t.
  void advance(double t) {
    if (opt_.grid_dt <= 0.0) return;
    while (true) {
      const double g = static_cast<double>(next_grid_) * opt_.grid_dt;
      if (g > t || g > tr_.horizon) break;
      tr_.grid.push(positions(g));
      ++next_grid_;
    }
  }

  void begin_event(double t, EventKind kind, Index coord) {
    advance(t);
    switch (kind) {
      case EventKind::Refresh: ++tr_.refreshments; break;
      case EventKind::Boundary: ++tr_.boundary_events; break;
      default: ++tr_.reflections; break;
    }
    if (!opt_.record_events) return;
    if (tr_.events.size() >= opt_.max_events)
      throw ResourceLimit("trajectory: event cap of " + std::to_string(opt_.max_events) + " reached");
    tr_.events.push_back({t, kind, coord, static_cast<std::uint64_t>(tr_.changes.size())});
  }

  /// Sets coordinate i to (x, v) at time t, closing its current segment.
  void set(Index i, double t, double x, double v) {
    integrate(i, t);
    x_[i] = x;
    v_[i] = v;
    t_[i] = t;
    if (opt_.record_events) tr_.changes.push_back({i, x, v});
  }

  /// Same as set() with the position continuing along the flow.
  void set_velocity(Index i, double t, double v) { set(i, t, position(i, t), v); }

  /// Closes all segments at `end` (<= horizon) and returns the trajectory.
  PdmpTrajectory finish(double end, const ThinningStats& stats) {
    end = std::min(end, tr_.horizon);
    advance(end);
    for (Index i = 0; i < dim(); ++i) integrate(i, end);
    if (end < tr_.horizon) {
      // stopped early: drop batches that were not fully covered
      const int full = static_cast<int>(std::floor(end / tr_.batch_length + 1e-12));
      const int keep = std::max(full, 1);
      tr_.batch_x.conservativeResize(Eigen::NoChange, keep);
      tr_.batch_abs.conservativeResize(Eigen::NoChange, keep);
      tr_.batch_sq.conservativeResize(Eigen::NoChange, keep);
      if (full >= 1) {
        tr_.horizon = full * tr_.batch_length;
      } else {
        tr_.horizon = end;
        tr_.batch_length = end;
      }
    }
    tr_.stats = stats;
    return std::move(tr_);
  }

 private:
  /// Adds the integrals of coordinate i over [t_i, t] to the batches.
  void integrate(Index i, double t) {
    double a = t_[i];
    if (t <= a) return;
    const double h = tr_.batch_length;
    const int nb = opt_.n_batches;
    int b = std::min(static_cast<int>(a / h), nb - 1);
    while (a < t && b < nb) {
      const double b_end = (b + 1 == nb) ? tr_.horizon : (b + 1) * h;
      const double e = std::min(t, b_end);
      if (e <= a) {  // a sits on the edge of batch b
        ++b;
        continue;
      }
      double ix, iabs, isq;
      segment_integrals(i, a, e, ix, iabs, isq);
      tr_.batch_x(i, b) += ix;
      tr_.batch_abs(i, b) += iabs;
      tr_.batch_sq(i, b) += isq;
      a = e;
    }
  }

  void segment_integrals(Index i, double a, double e, double& ix, double& iabs, double& isq) const {
    const double dt = e - a;
    if (tr_.flow.kind == FlowKind::Linear) {
      const double p = position(i, a), q = position(i, e);
      ix = 0.5 * (p + q) * dt;
      isq = (p * p + p * q + q * q) * dt / 3.0;
      if (p * q >= 0.0) {
        iabs = 0.5 * (std::abs(p) + std::abs(q)) * dt;
      } else {
        iabs = 0.5 * (p * p + q * q) / (std::abs(p) + std::abs(q)) * dt;
      }
      return;
    }
    // composite Simpson with step at most sigma / 100
    const double max_h = tr_.flow.sigma[i] / 100.0;
    long m = static_cast<long>(std::ceil(dt / max_h));
    if (m % 2 == 1) ++m;
    m = std::max(m, 2L);
    const double h = dt / static_cast<double>(m);
    ix = iabs = isq = 0.0;
    for (long k = 0; k <= m; ++k) {
      const double w = (k == 0 || k == m) ? 1.0 : (k % 2 == 1 ? 4.0 : 2.0);
      const double p = position(i, a + static_cast<double>(k) * h);
      ix += w * p;
      iabs += w * std::abs(p);
      isq += w * p * p;
    }
    ix *= h / 3.0;
    iabs *= h / 3.0;
    isq *= h / 3.0;
  }

  TrajectoryOptions opt_;
  Vec x_, v_, t_;
  long next_grid_ = 0;
  PdmpTrajectory tr_;
};

inline const Mat& batches(const PdmpTrajectory& tr, Statistic f) {
  switch (f) {
    case Statistic::Abs: return tr.batch_abs;
    case Statistic::Square: return tr.batch_sq;
    default: return tr.batch_x;
  }
}

/// (1/T) * integral of f(x_i(t)) over [0, T].
inline double trajectory_mean(const PdmpTrajectory& tr, Index i, Statistic f) {
  require(tr.horizon > 0.0, "trajectory_mean: empty trajectory");
  if (i < 0 || i >= tr.dim()) throw InvalidArgument("trajectory_mean: coordinate out of range");
  return batches(tr, f).row(i).sum() / tr.horizon;
}

inline Vec trajectory_means(const PdmpTrajectory& tr, Statistic f) {
  return batches(tr, f).rowwise().sum() / tr.horizon;
}

/// Batch-means standard error of trajectory_mean.
inline double trajectory_se(const PdmpTrajectory& tr, Index i, Statistic f) {
  const Mat& b = batches(tr, f);
  const Index nb = b.cols();
  if (nb < 2) return kInf;
  const Vec m = b.row(i).transpose() / tr.batch_length;
  const double mean = m.mean();
  const double var = (m.array() - mean).square().sum() / static_cast<double>(nb - 1);
  return std::sqrt(var / static_cast<double>(nb));
}

/// States at t = 0, dt, 2dt, ... <= T, reconstructed by replaying the
/// recorded events.
inline SampleChain trajectory_discretize(const PdmpTrajectory& tr, double dt) {
  require(dt > 0.0, "trajectory_discretize: dt must be positive");
  if (!tr.events_recorded) throw UnsupportedOperation("trajectory_discretize: events were not recorded");
  const Index n = tr.dim();
  Vec x = tr.x0, v = tr.v0, tref = Vec::Zero(n);
  SampleChain out(n);
  long k = 0;
  auto emit_until = [&](double t) {
    while (true) {
      const double g = static_cast<double>(k) * dt;
      if (g > t || g > tr.horizon * (1.0 + 1e-15)) break;
      Vec s(n);
      for (Index i = 0; i < n; ++i) s[i] = tr.flow.position(i, x[i], v[i], g - tref[i]);
      out.push(s);
      ++k;
    }
  };
  for (std::size_t e = 0; e < tr.events.size(); ++e) {
    const Event& ev = tr.events[e];
    emit_until(ev.time);
    const std::uint64_t end = e + 1 < tr.events.size() ? tr.events[e + 1].first_change : tr.changes.size();
    for (std::uint64_t c = ev.first_change; c < end; ++c) {
      const Change& ch = tr.changes[c];
      x[ch.coord] = ch.x;
      v[ch.coord] = ch.v;
      tref[ch.coord] = ev.time;
    }
  }
  emit_until(tr.horizon * (1.0 + 1e-15));
  return out;
}

}  // namespace ndmc
