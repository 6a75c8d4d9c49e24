#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <omp.h>

#include "amis/error.hpp"
#include "amis/experiments/commands.hpp"

namespace fs = std::filesystem;
using namespace amis::experiments;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitConfig = 2;

struct Flags {
  std::string config;
  std::string out;
  std::vector<std::uint64_t> seeds;
  std::optional<int> runs;
  int threads = 0;
  std::optional<int> iterations;
  std::optional<int> batch;
  bool include_flat = false;
};

std::vector<std::uint64_t> resolve_seeds(const Flags& f, int default_runs) {
  if (!f.seeds.empty()) {
    if (f.runs && *f.runs != static_cast<int>(f.seeds.size())) {
      throw amis::ConfigError("--runs must equal the number of --seeds");
    }
    return f.seeds;
  }
  const int runs = f.runs.value_or(default_runs);
  if (runs < 1) throw amis::ConfigError("--runs must be at least 1");
  return seed_range(default_seed_base(), runs);
}

int iterations_or(const Flags& f, int fallback) {
  const int k = f.iterations.value_or(fallback);
  if (k < 1) throw amis::ConfigError("--iterations must be at least 1");
  return k;
}

void print_summary(const std::vector<std::pair<std::string, SchemeSummary>>& summary) {
  for (const auto& [scheme, s] : summary) {
    std::cout << scheme << ": slope " << s.slope << ", final ESS " << s.final_ess_mean << " +- "
              << s.final_ess_stderr << '\n';
  }
}

int cmd_run(const Flags& f) {
  if (f.config.empty()) throw amis::ConfigError("run needs --config");
  auto config = load_config(f.config);
  if (!f.seeds.empty() || f.runs) config.seeds = resolve_seeds(f, static_cast<int>(config.seeds.size()));
  fs::path output = config.output;
  if (!f.out.empty()) output = fs::path(f.out) / output.filename();
  const auto rows = run_experiment(config, f.threads);
  write_csv(output, rows);
  std::cout << "wrote " << rows.size() << " rows to " << output.string() << '\n';
  return 0;
}

int cmd_fig2(const Flags& f) {
  Fig2Options o;
  o.seeds = resolve_seeds(f, 100);
  o.iterations = iterations_or(f, o.iterations);
  o.include_flat = f.include_flat;
  o.threads = f.threads;
  const auto result = run_fig2(o);
  write_figure(f.out.empty() ? "." : f.out, "fig2", result, kFig2UpperBoundSlope);
  print_summary(result.summary);
  std::cout << "upper_bound: slope " << kFig2UpperBoundSlope << '\n';
  return 0;
}

int cmd_fig3(const Flags& f) {
  Fig3Options o;
  o.seeds = resolve_seeds(f, 100);
  o.iterations = iterations_or(f, o.iterations);
  o.batch = f.batch.value_or(o.batch);
  if (o.batch < 1) throw amis::ConfigError("--batch must be at least 1");
  o.threads = f.threads;
  const auto result = run_fig3(o);
  write_figure(f.out.empty() ? "." : f.out, "fig3", result);
  print_summary(result.summary);
  return 0;
}

int cmd_timing(const Flags& f) {
  TimingOptions o;
  o.seeds = resolve_seeds(f, 100);
  const auto cells = run_timing(o);
  const fs::path path = fs::path(f.out.empty() ? "." : f.out) / "timing.json";
  write_timing_json(path, cells);
  for (const auto& c : cells) {
    std::cout << c.scheme << " K=" << c.iterations << ": " << c.seconds << " s" << (c.all_finite ? "" : " (non-finite)")
              << '\n';
  }
  return 0;
}

int cmd_counterexample(const Flags& f) {
  CounterexampleOptions o;
  o.seeds = resolve_seeds(f, 100);
  o.iterations = iterations_or(f, o.iterations);
  o.threads = f.threads;
  const auto rows = run_counterexample(o);
  write_counterexample(f.out.empty() ? "." : f.out, rows);
  std::cout << "runs below " << kCounterexampleThreshold << ": " << 100.0 * fraction_below(rows, kCounterexampleThreshold)
            << "%\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adaptive multiple importance sampling for controlled diffusions"};
  app.require_subcommand(1);
  Flags f;

  auto common = [&f](CLI::App* sub) {
    sub->add_option("--out", f.out, "Output directory");
    sub->add_option("--seeds", f.seeds, "Comma-separated seeds")->delimiter(',');
    sub->add_option("--runs", f.runs, "Number of runs (seeds AMIS_SEED, AMIS_SEED+1, ...)");
    sub->add_option("--threads", f.threads, "Worker threads for independent runs (0: all)");
  };

  auto* run = app.add_subcommand("run", "Run the experiment described by a JSON config");
  run->add_option("--config", f.config, "Config file")->required();
  common(run);

  auto* fig2 = app.add_subcommand("fig2", "ESS growth of the re-weighting schemes, constant basis");
  common(fig2);
  fig2->add_option("--iterations", f.iterations, "Iterations per run (batch size 1)");
  fig2->add_flag("--include-flat", f.include_flat, "Also run flat weights without discarding");

  auto* fig3 = app.add_subcommand("fig3", "ESS growth with the affine basis");
  common(fig3);
  fig3->add_option("--iterations", f.iterations, "Iterations per run");
  fig3->add_option("--batch", f.batch, "Samples per iteration");

  auto* timing = app.add_subcommand("timing", "Wall time against the number of iterations");
  common(timing);

  auto* counter = app.add_subcommand("counterexample", "Flat weights with proposals drifting away");
  common(counter);
  counter->add_option("--iterations", f.iterations, "Iterations per run");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }

  try {
    if (f.threads < 0) throw amis::ConfigError("--threads must be nonnegative");
    if (f.threads > 0) omp_set_num_threads(f.threads);
    if (run->parsed()) return cmd_run(f);
    if (fig2->parsed()) return cmd_fig2(f);
    if (fig3->parsed()) return cmd_fig3(f);
    if (timing->parsed()) return cmd_timing(f);
    return cmd_counterexample(f);
  } catch (const amis::ConfigError& e) {
    std::cerr << "invalid configuration: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
}
