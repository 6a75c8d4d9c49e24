#include "amis/experiments/commands.hpp"

#include <chrono>
#include <cmath>
#include <exception>
#include <fstream>
#include <numbers>

#include <omp.h>

#include <json.hpp>

#include "amis/error.hpp"

namespace amis::experiments {

namespace {

constexpr int kDefaultRuns = 100;

std::vector<std::uint64_t> seeds_or_default(const std::vector<std::uint64_t>& seeds) {
  return seeds.empty() ? seed_range(default_seed_base(), kDefaultRuns) : seeds;
}

ExperimentConfig figure_config(std::string experiment, ReweightScheme scheme, BasisConfig::Kind basis, int batch,
                               int iterations, std::vector<std::uint64_t> seeds) {
  ExperimentConfig c;
  c.experiment = std::move(experiment);
  c.problem.kind = ProblemConfig::Kind::GaussianTarget;
  c.scheme = scheme;
  c.basis.kind = basis;
  c.batch = batch;
  c.iterations = iterations;
  c.seeds = std::move(seeds);
  return c;
}

void append(std::vector<ResultRow>& to, std::vector<ResultRow> rows) {
  to.insert(to.end(), std::make_move_iterator(rows.begin()), std::make_move_iterator(rows.end()));
}

}  // namespace

std::vector<ResultRow> run_experiment(const ExperimentConfig& config, int threads) {
  const auto problem = build_problem(config.problem);
  const int runs = static_cast<int>(config.seeds.size());
  const std::string scheme = config.scheme.name();
  std::vector<std::vector<ResultRow>> per_run(static_cast<std::size_t>(runs));
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(runs));
  const int team = threads > 0 ? threads : omp_get_max_threads();

#pragma omp parallel for schedule(dynamic, 1) num_threads(team)
  for (int r = 0; r < runs; ++r) {
    try {
      AmisSampler sampler(problem, build_amis_config(config, problem, config.seeds[static_cast<std::size_t>(r)]));
      auto& rows = per_run[static_cast<std::size_t>(r)];
      rows.reserve(static_cast<std::size_t>(config.iterations));
      while (!sampler.done()) rows.push_back(make_row(config.experiment, scheme, r, sampler.step()));
    } catch (...) {
      errors[static_cast<std::size_t>(r)] = std::current_exception();
    }
  }

  std::vector<ResultRow> out;
  for (int r = 0; r < runs; ++r) {
    if (errors[static_cast<std::size_t>(r)]) std::rethrow_exception(errors[static_cast<std::size_t>(r)]);
    append(out, std::move(per_run[static_cast<std::size_t>(r)]));
  }
  return out;
}

void write_figure(const std::filesystem::path& dir, const std::string& name, const FigureResult& result,
                  double upper_bound_slope) {
  write_csv(dir / (name + ".csv"), result.rows);
  write_summary_json(dir / (name + "_summary.json"), result.summary, upper_bound_slope);
}

FigureResult run_fig2(const Fig2Options& options) {
  const auto seeds = seeds_or_default(options.seeds);
  const int K = options.iterations;
  std::vector<ExperimentConfig> configs = {
      figure_config("fig2", ReweightScheme::balance(), BasisConfig::Kind::Constant, 1, K, seeds),
      figure_config("fig2", ReweightScheme::discard_optimized(), BasisConfig::Kind::Constant, 1, K, seeds),
      figure_config("fig2", ReweightScheme::discard_fixed(), BasisConfig::Kind::Constant, 1, K, seeds),
  };
  const int M = options.nonmixing_batch;
  configs.push_back(figure_config("fig2", ReweightScheme::nonmixing(), BasisConfig::Kind::Constant, M,
                                  std::max(1, K / M), seeds));
  if (options.include_flat) {
    configs.push_back(figure_config("fig2", ReweightScheme::flat(), BasisConfig::Kind::Constant, 1, K, seeds));
  }

  FigureResult result;
  for (const auto& c : configs) append(result.rows, run_experiment(c, options.threads));
  result.summary = summarize(result.rows);
  return result;
}

FigureResult run_fig3(const Fig3Options& options) {
  const auto seeds = seeds_or_default(options.seeds);
  FigureResult result;
  for (auto scheme : {ReweightScheme::balance(), ReweightScheme::discard_optimized()}) {
    append(result.rows, run_experiment(figure_config("fig3", scheme, BasisConfig::Kind::Affine, options.batch,
                                                     options.iterations, seeds),
                                       options.threads));
  }
  result.summary = summarize(result.rows);
  return result;
}

std::vector<TimingCell> run_timing(const TimingOptions& options) {
  const auto seeds = seeds_or_default(options.seeds);
  std::vector<TimingCell> cells;
  for (auto scheme : {ReweightScheme::balance(), ReweightScheme::discard_optimized()}) {
    for (int K : options.iterations) {
      if (K < 1 || options.total_samples % K != 0) {
        throw ConfigError("total samples must be a multiple of every iteration count");
      }
      const auto config = figure_config("timing", scheme, BasisConfig::Kind::Affine, options.total_samples / K, K,
                                        seeds);
      const auto start = std::chrono::steady_clock::now();
      const auto rows = run_experiment(config, 1);
      const std::chrono::duration<double> elapsed = std::chrono::steady_clock::now() - start;

      TimingCell cell{scheme.name(), K, options.total_samples / K, elapsed.count(), true, 0.0};
      int finals = 0;
      for (const auto& r : rows) {
        if (r.iteration != K) continue;
        cell.all_finite = cell.all_finite && std::isfinite(r.psi_hat);
        cell.mean_psi += r.psi_hat;
        ++finals;
      }
      if (finals > 0) cell.mean_psi /= finals;
      cells.push_back(cell);
    }
  }
  return cells;
}

void write_timing_json(const std::filesystem::path& path, const std::vector<TimingCell>& cells) {
  nlohmann::ordered_json j;
  j["cells"] = nlohmann::ordered_json::array();
  for (const auto& c : cells) {
    j["cells"].push_back({{"scheme", c.scheme},
                          {"iterations", c.iterations},
                          {"batch", c.batch},
                          {"seconds", c.seconds},
                          {"all_psi_finite", c.all_finite},
                          {"mean_psi_hat", c.mean_psi}});
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << j.dump(2) << '\n';
}

std::vector<ResultRow> run_counterexample(const CounterexampleOptions& options) {
  ExperimentConfig c;
  c.experiment = "counterexample";
  c.problem.kind = ProblemConfig::Kind::OneStepGaussian;
  c.scheme = ReweightScheme::flat();
  c.adaptation.kind = AdaptationConfig::Kind::ForcedLinear;
  c.adaptation.forced_slope = 1.0;
  c.batch = 1;
  c.iterations = options.iterations;
  c.seeds = seeds_or_default(options.seeds);
  return run_experiment(c, options.threads);
}

double fraction_below(const std::vector<ResultRow>& rows, double threshold) {
  int last = 0;
  for (const auto& r : rows) last = std::max(last, r.iteration);
  int runs = 0;
  int below = 0;
  for (const auto& r : rows) {
    if (r.iteration != last) continue;
    ++runs;
    if (r.psi_hat < threshold) ++below;
  }
  return runs > 0 ? static_cast<double>(below) / runs : 0.0;
}

void write_counterexample(const std::filesystem::path& dir, const std::vector<ResultRow>& rows) {
  write_csv(dir / "counterexample.csv", rows);
  write_density_csv(dir / "density.csv");

  int last = 0;
  for (const auto& r : rows) last = std::max(last, r.iteration);
  double mean = 0.0;
  int runs = 0;
  for (const auto& r : rows) {
    if (r.iteration != last) continue;
    mean += r.psi_hat;
    ++runs;
  }
  nlohmann::ordered_json j;
  j["truth"] = problems::kOneStepGaussianTruth;
  j["threshold"] = kCounterexampleThreshold;
  j["runs"] = runs;
  j["final_psi_mean"] = runs > 0 ? mean / runs : 0.0;
  j["fraction_below_threshold"] = fraction_below(rows, kCounterexampleThreshold);
  std::ofstream out(dir / "counterexample_summary.json", std::ios::binary);
  if (!out) throw Error("cannot write " + (dir / "counterexample_summary.json").string());
  out << j.dump(2) << '\n';
}

void write_density_csv(const std::filesystem::path& path, const std::vector<double>& controls) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  const double norm = 1.0 / std::sqrt(2.0 * std::numbers::pi);
  out << "u,x,p_u,hq,hq_over_p_u\n";
  char buf[160];
  for (double u : controls) {
    for (int i = 0; i <= 400; ++i) {
      const double x = -5.0 + 0.05 * i;
      const double p = norm * std::exp(-0.5 * (x - u) * (x - u));
      const double hq = std::exp(-0.5 * x * x) * norm * std::exp(-0.5 * x * x);
      std::snprintf(buf, sizeof buf, "%.17g,%.17g,%.17g,%.17g,%.17g\n", u, x, p, hq, hq / p);
      out << buf;
    }
  }
}

}  // namespace amis::experiments
