// ndmc: run, compare and post-process sampler experiments.
//
//   ndmc run <cfg>
//   ndmc compare <cfg> <cfg>... --metric ess-per-sec|mse-over-time|ks [--budget s]
//   ndmc emit-plotdata <run dir>
//
// Relative output directories resolve against $NDMC_OUTPUT_ROOT (default ".").
//
// Exit codes: 0 ok, 1 invalid config or runtime error, 2 unknown model or
// sampler id, 3 sampler divergence (partial artifacts written), 4 missing
// artifacts, 64 usage error.

#include <ndmc/harness/artifacts.hpp>

#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>

namespace {

enum Exit : int { kOk = 0, kError = 1, kUnknownId = 2, kDiverged = 3, kMissing = 4, kUsage = 64 };

std::filesystem::path output_root() {
  const char* env = std::getenv("NDMC_OUTPUT_ROOT");
  return env && *env ? std::filesystem::path(env) : std::filesystem::path(".");
}

template <class F>
int guarded(F&& body) {
  try {
    return body();
  } catch (const ndmc::UnknownId& e) {
    std::cerr << "ndmc: " << e.what() << '\n';
    return kUnknownId;
  } catch (const ndmc::MissingArtifact& e) {
    std::cerr << "ndmc: " << e.what() << '\n';
    return kMissing;
  } catch (const std::exception& e) {
    std::cerr << "ndmc: " << e.what() << '\n';
    return kError;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sampler benchmark harness for nonsmooth posteriors"};
  app.require_subcommand(1);

  std::string cfg_path;
  auto* run = app.add_subcommand("run", "Run one experiment config");
  run->add_option("config", cfg_path, "Experiment config (INI)")->required();

  std::vector<std::string> cmp_paths;
  std::string metric = "ess-per-sec";
  double budget = 0.0;
  auto* cmp = app.add_subcommand("compare", "Run several configs on one model and tabulate a metric");
  cmp->add_option("configs", cmp_paths, "Experiment configs")->required();
  cmp->add_option("--metric", metric, "ess-per-sec, mse-over-time or ks")->capture_default_str();
  cmp->add_option("--budget", budget, "Per-sampler wall-clock seconds (overrides the configs)");

  std::string run_dir;
  auto* plot = app.add_subcommand("emit-plotdata", "Write trace, ACF and histogram files for a run");
  plot->add_option("dir", run_dir, "Run output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsage;
  }

  if (*run) {
    return guarded([&] {
      const auto summary = ndmc::run_experiment(ndmc::load_config(cfg_path), output_root());
      std::cout << summary.dir.string() << '\n';
      if (summary.status == ndmc::RunStatus::Diverged) {
        std::cerr << "ndmc: sampler diverged: " << summary.message << '\n';
        return static_cast<int>(kDiverged);
      }
      return static_cast<int>(kOk);
    });
  }
  if (*cmp) {
    return guarded([&] {
      const auto m = ndmc::parse_metric(metric);
      std::vector<ndmc::ExperimentConfig> cfgs;
      for (const auto& p : cmp_paths) cfgs.push_back(ndmc::load_config(p));
      std::cout << ndmc::compare(cfgs, m, output_root(), budget).csv();
      return static_cast<int>(kOk);
    });
  }
  return guarded([&] {
    const auto s = ndmc::emit_plotdata(run_dir);
    std::cout << s.files.size() << " files for " << s.samples << " samples x " << s.dim << " coordinates\n";
    return static_cast<int>(kOk);
  });
}
