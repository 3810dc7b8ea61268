#pragma once

#include <ndmc/diagnostics.hpp>
#include <ndmc/harness/experiment.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>

namespace ndmc {

/// A run artifact that should exist but does not.
class MissingArtifact : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace fs = std::filesystem;

/// Shortest-round-trip-safe text form; identical doubles print identically.
inline std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

struct Histogram {
  std::vector<double> edges;  // bins + 1 edges
  std::vector<long> counts;
};

/// Equal-width bins over [min, max]; the last bin is closed.
inline Histogram histogram(const Vec& x, int bins = 50) {
  require(bins >= 1, "histogram: need at least one bin");
  if (x.size() == 0) throw InsufficientData("histogram: no samples");
  double lo = x.minCoeff(), hi = x.maxCoeff();
  if (hi <= lo) {
    lo -= 0.5;
    hi += 0.5;
  }
  Histogram h;
  h.counts.assign(static_cast<std::size_t>(bins), 0);
  for (int b = 0; b <= bins; ++b) h.edges.push_back(lo + (hi - lo) * b / bins);
  for (Index k = 0; k < x.size(); ++k) {
    const int b = std::min(bins - 1, static_cast<int>((x[k] - lo) / (hi - lo) * bins));
    ++h.counts[static_cast<std::size_t>(std::max(b, 0))];
  }
  return h;
}

// ---------------------------------------------------------------------------
// Writers and readers

inline std::ofstream open_out(const fs::path& p) {
  std::ofstream out(p, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + p.string() + "'");
  return out;
}

inline void write_samples(const fs::path& p, const SampleChain& c) {
  auto out = open_out(p);
  for (Index i = 0; i < c.dim; ++i) out << (i ? "," : "") << 'x' << i;
  out << '\n';
  for (std::size_t k = 0; k < c.size(); ++k) {
    const auto s = c.state(k);
    for (Index i = 0; i < c.dim; ++i) out << (i ? "," : "") << fmt(s[i]);
    out << '\n';
  }
}

inline SampleChain read_samples(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw MissingArtifact("missing artifact '" + p.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw MissingArtifact("empty artifact '" + p.string() + "'");
  const Index dim = static_cast<Index>(std::count(line.begin(), line.end(), ',') + 1);
  SampleChain c(dim);
  Vec row(dim);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tok;
    Index i = 0;
    while (std::getline(ls, tok, ',')) {
      if (i >= dim) throw InvalidArgument("samples file '" + p.string() + "': ragged row");
      row[i++] = std::stod(tok);
    }
    if (i != dim) throw InvalidArgument("samples file '" + p.string() + "': ragged row");
    c.push(row);
  }
  return c;
}

inline void write_events(const fs::path& p, const PdmpTrajectory& tr) {
  auto out = open_out(p);
  out << "time,kind,coord\n";
  for (const Event& e : tr.events) out << fmt(e.time) << ',' << to_string(e.kind) << ',' << e.coord << '\n';
}

inline void write_histogram(const fs::path& p, const Histogram& h) {
  auto out = open_out(p);
  out << "left,right,count\n";
  for (std::size_t b = 0; b < h.counts.size(); ++b)
    out << fmt(h.edges[b]) << ',' << fmt(h.edges[b + 1]) << ',' << h.counts[b] << '\n';
}

// ---------------------------------------------------------------------------
// run

enum class RunStatus { Ok, Diverged };

struct RunSummary {
  RunStatus status = RunStatus::Ok;
  fs::path dir;
  SamplerOutcome outcome;
  std::vector<double> ks_p;  // per coordinate, when the model has known marginals
  std::string message;
};

inline fs::path resolve_output(const ExperimentConfig& cfg, const fs::path& root) {
  const fs::path out(cfg.output);
  return out.is_absolute() ? out : root / out;
}

/// KS p-value per coordinate on samples thinned to roughly independent draws.
inline std::vector<double> marginal_ks(const SampleChain& c, const ModelBundle& mb) {
  std::vector<double> p;
  if (!mb.marginal_cdf || c.size() < 100) return p;
  for (Index i = 0; i < c.dim; ++i) {
    const auto thinned = thin_by_tau(c.coordinate(i));
    if (thinned.size() < 8) {
      p.push_back(std::numeric_limits<double>::quiet_NaN());
      continue;
    }
    p.push_back(ks_test(thinned, [&](double x) { return mb.marginal_cdf(i, x); }).p_value);
  }
  return p;
}

inline void write_report(const fs::path& p, const ExperimentConfig& cfg, const ModelBundle& mb,
                         const RunSummary& s) {
  const SampleChain& c = s.outcome.chain;
  auto out = open_out(p);
  out << "name = " << cfg.name << "\nmodel = " << cfg.model << "\nsampler = " << cfg.sampler
      << "\nseed = " << cfg.seed << "\ndim = " << mb.model->dim() << "\nsamples = " << c.size()
      << "\nstatus = " << (s.status == RunStatus::Ok ? "ok" : "diverged") << '\n';
  if (!s.message.empty()) out << "message = " << s.message << '\n';
  out << "wall_time = " << fmt(c.wall_time) << '\n';
  if (s.outcome.acceptance >= 0.0) out << "acceptance = " << fmt(s.outcome.acceptance) << '\n';
  if (s.outcome.tuned_delta > 0.0) out << "delta = " << fmt(s.outcome.tuned_delta) << '\n';
  if (const auto& tr = s.outcome.trajectory) {
    out << "horizon = " << fmt(tr->horizon) << "\nreflections = " << tr->reflections
        << "\nrefreshments = " << tr->refreshments << "\nboundary_events = " << tr->boundary_events
        << "\nthinning_proposals = " << tr->stats.proposals << "\nthinning_accepted = " << tr->stats.accepted << '\n';
    if (s.outcome.clock_draws > 0) out << "clock_draws = " << s.outcome.clock_draws << '\n';
  }
  out << "\ncoord,mean,var,ess,tau,ess_per_sec,ks_p";
  const bool traj_stats = s.outcome.trajectory && s.outcome.trajectory->batch_length > 0.0;
  if (traj_stats) out << ",time_mean,time_mean_se";
  out << '\n';
  const DiagnosticsReport rep = make_report(c);
  for (Index i = 0; i < c.dim; ++i) {
    const auto k = static_cast<std::size_t>(i);
    out << i;
    if (k < rep.moments.size()) out << ',' << fmt(rep.moments[k].mean) << ',' << fmt(rep.moments[k].variance);
    else out << ",nan,nan";
    if (k < rep.ess.size())
      out << ',' << fmt(rep.ess[k].ess) << ',' << fmt(rep.ess[k].tau) << ',' << fmt(rep.ess_per_second[k]);
    else out << ",nan,nan,nan";
    out << ',' << (k < s.ks_p.size() ? fmt(s.ks_p[k]) : "nan");
    if (traj_stats)
      out << ',' << fmt(trajectory_mean(*s.outcome.trajectory, i, Statistic::Coordinate)) << ','
          << fmt(trajectory_se(*s.outcome.trajectory, i, Statistic::Coordinate));
    out << '\n';
  }
}

/// Builds the model and sampler, runs, and writes samples.csv, events.log
/// (PDMPs with recorded events), report.txt and histogram_<i>.csv into the
/// config's output directory under `root`. Divergence still writes the
/// partial chain and returns RunStatus::Diverged.
inline RunSummary run_experiment(const ExperimentConfig& cfg, const fs::path& root) {
  if (std::find(model_ids().begin(), model_ids().end(), cfg.model) == model_ids().end())
    throw UnknownId("unknown model id '" + cfg.model + "'");
  if (std::find(sampler_ids().begin(), sampler_ids().end(), cfg.sampler) == sampler_ids().end())
    throw UnknownId("unknown sampler id '" + cfg.sampler + "'");
  const ModelBundle mb = build_model(cfg.model, cfg.model_params);
  Rng rng(cfg.seed);

  RunSummary s;
  s.dir = resolve_output(cfg, root);
  fs::create_directories(s.dir);
  s.outcome = run_sampler(cfg.sampler, cfg.sampler_params, mb, cfg.time_budget, rng);
  const SampleChain& c = s.outcome.chain;
  if (c.diverged) {
    s.status = RunStatus::Diverged;
    s.message = c.diagnostic;
  }
  s.ks_p = marginal_ks(c, mb);

  write_samples(s.dir / "samples.csv", c);
  if (s.outcome.trajectory && s.outcome.trajectory->events_recorded)
    write_events(s.dir / "events.log", *s.outcome.trajectory);
  for (Index i = 0; i < c.dim && !c.empty(); ++i)
    write_histogram(s.dir / ("histogram_" + std::to_string(i) + ".csv"), histogram(c.coordinate(i)));
  write_report(s.dir / "report.txt", cfg, mb, s);
  return s;
}

// ---------------------------------------------------------------------------
// emit_plotdata

struct PlotdataSummary {
  Index dim = 0;
  std::size_t samples = 0;
  std::vector<fs::path> files;
};

/// Reads samples.csv from a run directory and writes whitespace-delimited
/// trace_<i>.dat, acf_<i>.dat and hist_<i>.dat next to it.
inline PlotdataSummary emit_plotdata(const fs::path& dir, Index max_lag = 200, int bins = 50) {
  if (!fs::is_directory(dir)) throw MissingArtifact("no run directory '" + dir.string() + "'");
  const SampleChain c = read_samples(dir / "samples.csv");
  if (c.size() < 2) throw InsufficientData("emit_plotdata: need at least two samples");
  PlotdataSummary out{c.dim, c.size(), {}};
  const Index lag = std::min<Index>(max_lag, static_cast<Index>(c.size()) - 1);
  for (Index i = 0; i < c.dim; ++i) {
    const Vec x = c.coordinate(i);
    const std::string tag = std::to_string(i);

    out.files.push_back(dir / ("trace_" + tag + ".dat"));
    auto tr = open_out(out.files.back());
    tr << "# index value\n";
    for (Index k = 0; k < x.size(); ++k) tr << k << ' ' << fmt(x[k]) << '\n';

    out.files.push_back(dir / ("acf_" + tag + ".dat"));
    auto af = open_out(out.files.back());
    af << "# lag acf\n";
    if (x.maxCoeff() > x.minCoeff()) {
      const Vec r = acf_fft(x, lag);
      for (Index k = 0; k <= lag; ++k) af << k << ' ' << fmt(r[k]) << '\n';
    } else {
      af << "0 1\n";
    }

    out.files.push_back(dir / ("hist_" + tag + ".dat"));
    auto hf = open_out(out.files.back());
    hf << "# left right count density\n";
    const Histogram h = histogram(x, bins);
    const double width = h.edges[1] - h.edges[0];
    for (std::size_t b = 0; b < h.counts.size(); ++b)
      hf << fmt(h.edges[b]) << ' ' << fmt(h.edges[b + 1]) << ' ' << h.counts[b] << ' '
         << fmt(static_cast<double>(h.counts[b]) / (static_cast<double>(x.size()) * width)) << '\n';
  }
  return out;
}

// ---------------------------------------------------------------------------
// compare

enum class Metric { EssPerSec, MseOverTime, Ks };

inline Metric parse_metric(const std::string& s) {
  if (s == "ess-per-sec") return Metric::EssPerSec;
  if (s == "mse-over-time") return Metric::MseOverTime;
  if (s == "ks") return Metric::Ks;
  throw InvalidArgument("unknown metric '" + s + "' (expected ess-per-sec, mse-over-time or ks)");
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string csv() const {
    std::string s;
    auto line = [&](const std::vector<std::string>& r) {
      for (std::size_t k = 0; k < r.size(); ++k) s += (k ? "," : "") + r[k];
      s += '\n';
    };
    line(header);
    for (const auto& r : rows) line(r);
    return s;
  }
};

inline std::vector<std::string> table_header(Metric m) {
  switch (m) {
    case Metric::EssPerSec:
      return {"config", "sampler", "status", "samples", "wall_time", "min_ess", "min_ess_per_sec",
              "median_ess_per_sec"};
    case Metric::Ks: return {"config", "sampler", "status", "samples", "wall_time", "min_ks_p", "median_ks_p", "pass"};
    case Metric::MseOverTime: return {"config", "sampler", "status", "fraction", "time", "mse"};
  }
  return {};
}

namespace detail {

inline double median(std::vector<double> v) {
  if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
  std::sort(v.begin(), v.end());
  const std::size_t h = v.size() / 2;
  return v.size() % 2 ? v[h] : 0.5 * (v[h - 1] + v[h]);
}

inline Vec running_mean(const SampleChain& c, std::size_t upto) {
  Vec m = Vec::Zero(c.dim);
  for (std::size_t k = 0; k < upto; ++k) m += c.state(k);
  return m / static_cast<double>(upto);
}

}  // namespace detail

/// Runs every config (same model id and parameters required) and tabulates
/// one metric per sampler. `budget` > 0 overrides each config's time budget
/// so all samplers get the same wall clock.
inline Table compare(const std::vector<ExperimentConfig>& configs, Metric metric, const fs::path& root,
                     double budget = 0.0) {
  if (configs.size() < 2) throw InvalidArgument("compare: need at least two configs");
  for (const auto& c : configs)
    if (c.model != configs[0].model || c.model_params.values() != configs[0].model_params.values())
      throw InvalidArgument("compare: configs '" + configs[0].name + "' and '" + c.name +
                            "' target different models");

  std::vector<RunSummary> runs;
  std::optional<Vec> exact_mean;
  for (ExperimentConfig c : configs) {
    if (budget > 0.0) c.time_budget = budget;
    runs.push_back(run_experiment(c, root));
  }
  {
    const ModelBundle mb = build_model(configs[0].model, configs[0].model_params);
    exact_mean = mb.exact_mean;
    if (metric == Metric::Ks && !mb.marginal_cdf)
      throw InvalidArgument("compare: metric ks needs a model with known marginals");
  }

  Table t;
  t.header = table_header(metric);
  Vec reference;
  if (metric == Metric::MseOverTime) {
    if (exact_mean) {
      reference = *exact_mean;
    } else {
      reference = Vec::Zero(runs[0].outcome.chain.dim);
      for (const auto& r : runs) {
        if (r.outcome.chain.empty()) throw InsufficientData("compare: run '" + r.dir.string() + "' has no samples");
        reference += detail::running_mean(r.outcome.chain, r.outcome.chain.size());
      }
      reference /= static_cast<double>(runs.size());
    }
  }
  for (std::size_t k = 0; k < runs.size(); ++k) {
    const SampleChain& c = runs[k].outcome.chain;
    const std::string status = runs[k].status == RunStatus::Ok ? "ok" : "diverged";
    const std::vector<std::string> lead{configs[k].name, configs[k].sampler, status};
    auto row = lead;
    switch (metric) {
      case Metric::EssPerSec: {
        const DiagnosticsReport rep = make_report(c);
        double min_ess = kInf;
        for (const auto& e : rep.ess) min_ess = std::min(min_ess, e.ess);
        const auto& eps = rep.ess_per_second;
        row.insert(row.end(), {std::to_string(c.size()), fmt(c.wall_time), fmt(rep.ess.empty() ? 0.0 : min_ess),
                               fmt(eps.empty() ? 0.0 : *std::min_element(eps.begin(), eps.end())),
                               fmt(detail::median(eps))});
        t.rows.push_back(row);
        break;
      }
      case Metric::Ks: {
        const auto& p = runs[k].ks_p;
        const double lo = p.empty() ? 0.0 : *std::min_element(p.begin(), p.end());
        row.insert(row.end(), {std::to_string(c.size()), fmt(c.wall_time), fmt(lo), fmt(detail::median(p)),
                               lo > 0.01 ? "yes" : "no"});
        t.rows.push_back(row);
        break;
      }
      case Metric::MseOverTime: {
        for (double f : {0.125, 0.25, 0.5, 1.0}) {
          const auto upto = static_cast<std::size_t>(std::ceil(f * static_cast<double>(c.size())));
          auto r = lead;
          const double mse = upto == 0 ? std::numeric_limits<double>::quiet_NaN()
                                       : (detail::running_mean(c, upto) - reference).squaredNorm() /
                                             static_cast<double>(c.dim);
          r.insert(r.end(), {fmt(f), fmt(f * c.wall_time), fmt(mse)});
          t.rows.push_back(r);
        }
        break;
      }
    }
  }
  return t;
}

}  // namespace ndmc
