#pragma once

#include <ndmc/harness/config.hpp>
#include <ndmc/langevin.hpp>
#include <ndmc/models/besselk_logistic.hpp>
#include <ndmc/models/gaussian.hpp>
#include <ndmc/models/laplace.hpp>
#include <ndmc/models/nuclear.hpp>
#include <ndmc/models/tv_deblur.hpp>
#include <ndmc/models/wrapped_mixture.hpp>
#include <ndmc/pdmp/hbps.hpp>
#include <ndmc/pdmp/local_bps.hpp>
#include <ndmc/pdmp/zigzag.hpp>

#include <optional>

namespace ndmc {

/// A model with what the harness needs around it.
struct ModelBundle {
  ModelPtr model;
  Vec x0;
  /// Exact marginal CDF of coordinate i, when known in closed form.
  std::function<double(Index, double)> marginal_cdf;
  std::optional<Vec> exact_mean;
  Index image_rows = 0, image_cols = 0;  // > 0 for image models
};

inline const std::vector<std::string>& model_ids() {
  static const std::vector<std::string> ids{"laplace", "gaussian", "besselk_logistic", "wrapped_mixture", "nuclear",
                                            "tv_deblur"};
  return ids;
}

inline const std::vector<std::string>& sampler_ids() {
  static const std::vector<std::string> ids{"zzs", "bps", "local_bps", "hbps", "my_ula", "my_uula", "pmala"};
  return ids;
}

namespace detail {

inline std::uint64_t data_seed(const ParamSet& p) {
  const long s = p.get_long("data_seed", 1);
  require(s >= 0, "[model] data_seed must be nonnegative");
  return static_cast<std::uint64_t>(s);
}

/// `key` as an explicit list, or 1..dim transformed by `f`.
inline Vec list_or_dim(const ParamSet& p, const std::string& key, const std::function<double(double)>& f) {
  if (p.has(key)) {
    if (p.has("dim")) throw InvalidArgument("[model] give either " + key + " or dim, not both");
    const auto v = p.get_list(key);
    if (v.empty()) throw InvalidArgument("[model] " + key + " is empty");
    return Eigen::Map<const Vec>(v.data(), static_cast<Index>(v.size()));
  }
  const long d = p.get_long("dim", 10);
  require(d >= 1, "[model] dim must be positive");
  Vec out(d);
  for (long i = 0; i < d; ++i) out[i] = f(static_cast<double>(i + 1));
  return out;
}

}  // namespace detail

/// Builds a model from its config section. Synthetic data come from
/// `data_seed` (default 1) so that runs with different sampler seeds see
/// the same posterior.
inline ModelBundle build_model(const std::string& id, const ParamSet& p) {
  ModelBundle b;
  if (id == "laplace") {
    const Vec beta = detail::list_or_dim(p, "beta", [](double i) { return i; });
    b.model = build_laplace(beta);
    const auto* m = static_cast<const AnisotropicLaplace*>(b.model.get());
    b.marginal_cdf = [m](Index i, double x) { return m->cdf(i, x); };
    b.exact_mean = Vec::Zero(beta.size());
  } else if (id == "gaussian") {
    const Vec var = detail::list_or_dim(p, "variances", [](double i) { return 1.0 / (i * i); });
    b.model = build_gaussian(var);
    const auto* m = static_cast<const AnisotropicGaussian*>(b.model.get());
    b.marginal_cdf = [m](Index i, double x) { return m->cdf(i, x); };
    b.exact_mean = Vec::Zero(var.size());
  } else if (id == "besselk_logistic") {
    const long n = p.get_long("n_params", 50), d = p.get_long("n_obs", 40), k = p.get_long("signals", 5);
    require(n >= 1 && d >= 2 && k >= 0, "[model] need n_params >= 1, n_obs >= 2, signals >= 0");
    const auto data = make_sparse_logistic(n, d, k, p.get_double("magnitude", 2.0), detail::data_seed(p));
    b.model = build_besselk_logistic(data.Z, data.y, p.get_double("p", 0.002), p.get_double("eps", 0.05));
  } else if (id == "wrapped_mixture") {
    const auto centers = p.has("centers") ? p.get_list("centers") : std::vector<double>{1.0, 4.0};
    require(centers.size() == 2, "[model] centers needs two angles");
    const long per = p.get_long("per_cluster", 20);
    require(per >= 1, "[model] per_cluster must be positive");
    const auto data =
        make_two_cluster_angles(centers[0], centers[1], static_cast<int>(per), p.get_double("spread", 0.3),
                                detail::data_seed(p));
    b.model = build_wrapped_mixture(data);
    b.x0.resize(7);
    b.x0 << std::numbers::pi / 2, 3 * std::numbers::pi / 2, 1.0, 1.0, 1.0, 1.0, 0.5;
  } else if (id == "nuclear") {
    const long n = p.get_long("size", 4);
    require(n >= 2, "[model] size must be at least 2");
    const double sigma = p.get_double("sigma", 0.3);
    Mat y = checkerboard(n);
    std::mt19937_64 rng(detail::data_seed(p));
    std::normal_distribution<double> z(0.0, sigma);
    for (Index k = 0; k < y.size(); ++k) y.data()[k] += z(rng);
    b.model = build_nuclear(y, sigma, p.get_double("alpha", 1.0), p.get_double("hbps_lambda", 0.0));
    b.x0 = Eigen::Map<const Vec>(y.data(), y.size());
    b.image_rows = b.image_cols = n;
  } else if (id == "tv_deblur") {
    const double sigma = p.get_double("sigma", 0.47), alpha = p.get_double("alpha", 0.03);
    const std::string image = p.get_string("image", "");
    const long n = p.get_long("size", 32);
    // gray levels: read_pgm and test_image return [0, 1]
    const double scale = p.get_double("scale", 255.0);
    require(scale > 0.0, "[model] scale must be positive");
    const Mat truth = scale * (image.empty() ? test_image(n) : read_pgm(image));
    const Mat y = blurred_observation(truth, sigma, detail::data_seed(p));
    b.model = std::make_shared<TvDeblur>(y, sigma, alpha, p.get_double("prox_tol", 1e-6),
                                         static_cast<int>(p.get_long("prox_max_iter", 500)));
    b.x0 = Eigen::Map<const Vec>(y.data(), y.size());
    b.image_rows = y.rows();
    b.image_cols = y.cols();
  } else {
    throw UnknownId("unknown model id '" + id + "'");
  }
  if (b.x0.size() == 0) b.x0 = Vec::Zero(b.model->dim());
  p.finish();
  return b;
}

/// Everything a sampler run produced.
struct SamplerOutcome {
  SampleChain chain;
  std::optional<PdmpTrajectory> trajectory;
  double acceptance = -1.0;  // Metropolis-adjusted samplers only
  double tuned_delta = 0.0;
  long clock_draws = 0;
};

namespace detail {

inline std::optional<ClockRule> clock_choice(const ParamSet& p) {
  const std::string c = p.get_string("clock", "default");
  if (c == "default") return std::nullopt;
  if (c == "numeric") return NumericClock{p.get_double("numeric_step", 0.25), p.get_double("numeric_tol", 1e-10)};
  if (c == "endpoint") return endpoint_bound(p.get_double("theta", 1.0));
  throw InvalidArgument("[sampler] clock must be default, numeric or endpoint");
}

inline SampleChain drop_before(const SampleChain& grid, double dt, double burn_in) {
  SampleChain out(grid.dim);
  out.wall_time = grid.wall_time;
  const std::size_t skip = dt > 0.0 ? static_cast<std::size_t>(std::ceil(burn_in / dt - 1e-9)) : 0;
  for (std::size_t k = skip; k < grid.size(); ++k) out.push(grid.state(k));
  return out;
}

inline SamplerOutcome run_pdmp(const std::string& id, const ParamSet& p, const ModelBundle& mb, double budget,
                               Rng& rng) {
  const TargetModel& model = *mb.model;
  const Index n = model.dim();
  PdmpOptions opt;
  opt.horizon = p.get_double("horizon", 1000.0);
  opt.grid_dt = p.get_double("dt", 1.0);
  opt.record_events = p.get_bool("record_events", true);
  opt.n_batches = static_cast<int>(p.get_long("n_batches", 50));
  opt.time_budget = budget;
  const double burn_in = p.get_double("burn_in", 0.0);
  require(opt.grid_dt > 0.0, "[sampler] dt must be positive");
  require(burn_in >= 0.0 && burn_in < opt.horizon, "[sampler] burn_in must lie in [0, horizon)");
  const auto clock = clock_choice(p);

  SamplerOutcome out;
  if (id == "zzs") {
    std::vector<ClockRule> clocks;
    if (clock) clocks.assign(static_cast<std::size_t>(n), *clock);
    p.finish();
    std::bernoulli_distribution coin(0.5);
    Vec v0(n);
    for (Index i = 0; i < n; ++i) v0[i] = coin(rng) ? 1.0 : -1.0;
    out.trajectory = zz_run(model, opt, clocks, mb.x0, v0, rng);
  } else {
    const double phi = p.get_double("phi", 1.0);
    const bool full_redraw = p.get_bool("full_redraw", false);
    p.finish();
    const Vec v0 = standard_normal(n, rng);
    if (id == "bps") {
      out.trajectory = bps_run(model, opt, phi, clock, mb.x0, v0, rng);
    } else if (id == "hbps") {
      out.trajectory = hbps_run(model, opt, phi, clock, mb.x0, v0, rng);
    } else {
      if (clock) throw InvalidArgument("[sampler] local_bps uses the model's factor clocks");
      auto r = local_bps_run(model, opt, phi, mb.x0, v0, rng, LocalBpsOptions{full_redraw});
      out.trajectory = std::move(r.trajectory);
      out.clock_draws = r.clock_draws;
    }
  }
  out.chain = drop_before(out.trajectory->grid, opt.grid_dt, burn_in);
  out.chain.wall_time = out.trajectory->wall_time;
  return out;
}

inline SamplerOutcome run_langevin(const std::string& id, const ParamSet& p, const ModelBundle& mb, double budget,
                                   Rng& rng) {
  const TargetModel& model = *mb.model;
  ChainOptions co;
  co.n_steps = p.get_long("n_steps", 10000);
  co.burn_in = p.get_long("burn_in", 0);
  co.thin = p.get_long("thin", 1);
  co.time_budget = budget;
  const double lambda = p.get_double("lambda", 0.01);
  auto ws = std::make_shared<ProxWorkspace>();

  SamplerOutcome out;
  Stepper step;
  Vec x0 = mb.x0;
  if (id == "my_ula") {
    const UlaConfig cfg{p.get_double("delta", lambda / 2), lambda};
    cfg.validate();
    step = [cfg, &model, ws](Vec& x, Vec&, Rng& r) {
      x = my_ula_step(x, cfg, model, r, ws.get());
      return true;
    };
  } else if (id == "my_uula") {
    UulaConfig cfg = uula_defaults(lambda);
    cfg.nu = p.get_double("nu", cfg.nu);
    cfg.gamma = p.get_double("gamma", cfg.gamma);
    cfg.xi = p.get_double("xi", cfg.xi);
    const UulaCovariance cov = cfg.covariance();
    step = [cfg, cov, &model, ws](Vec& x, Vec& v, Rng& r) {
      my_uula_step(x, v, cfg, cov, model, r, ws.get());
      return true;
    };
  } else {
    double delta = p.get_double("delta", lambda);
    const long adapt = p.get_long("adapt", 0);
    const double target = p.get_double("target_acceptance", 0.55);
    require(adapt >= 0, "[sampler] adapt must be nonnegative");
    if (adapt > 0) {
      p.finish();
      const auto t = tune_pmala(x0, delta, lambda, model, rng, adapt, target, ws.get());
      delta = t.delta;
    }
    out.tuned_delta = delta;
    co.record_acceptance = true;
    step = [delta, lambda, &model, ws](Vec& x, Vec&, Rng& r) { return pmala_step(x, delta, lambda, model, r, ws.get()); };
  }
  p.finish();
  out.chain = run_chain(step, x0, Vec::Zero(x0.size()), co, rng);
  if (co.record_acceptance) out.acceptance = out.chain.acceptance_rate();
  return out;
}

}  // namespace detail

/// Runs the configured sampler on a built model. `budget` is the wall-clock
/// limit in seconds; runs stop gracefully at the next step or event.
inline SamplerOutcome run_sampler(const std::string& id, const ParamSet& p, const ModelBundle& mb, double budget,
                                  Rng& rng) {
  if (id == "zzs" || id == "bps" || id == "local_bps" || id == "hbps") return detail::run_pdmp(id, p, mb, budget, rng);
  if (id == "my_ula" || id == "my_uula" || id == "pmala") return detail::run_langevin(id, p, mb, budget, rng);
  throw UnknownId("unknown sampler id '" + id + "'");
}

}  // namespace ndmc
