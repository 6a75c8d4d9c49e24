#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "amis/experiments/config.hpp"
#include "amis/experiments/results.hpp"

namespace amis::experiments {

/// Runs every seed of `config` (concurrently when threads != 1; 0 uses the
/// OpenMP default). Rows come back in (run, iteration) order.
std::vector<ResultRow> run_experiment(const ExperimentConfig& config, int threads = 0);

struct FigureResult {
  std::vector<ResultRow> rows;
  std::vector<std::pair<std::string, SchemeSummary>> summary;
};

/// Writes <dir>/<name>.csv and <dir>/<name>_summary.json.
void write_figure(const std::filesystem::path& dir, const std::string& name, const FigureResult& result,
                  double upper_bound_slope = 0.0);

// max over constant controls of the per-sample ESS for the d = 3 Gaussian
// target, (sqrt(3)/2)^d, attained at A = z/2.
inline constexpr double kFig2UpperBoundSlope = 0.649519052838329;

struct Fig2Options {
  std::vector<std::uint64_t> seeds;  // empty: 100 seeds from AMIS_SEED
  int iterations = 300;
  int nonmixing_batch = 10;
  bool include_flat = false;
  int threads = 0;
};

/// ESS growth of balance, optimized discarding, fixed discarding and
/// non-mixing on the Gaussian target with a constant basis.
FigureResult run_fig2(const Fig2Options& options);

struct Fig3Options {
  std::vector<std::uint64_t> seeds;
  int batch = 20;
  int iterations = 15;
  int threads = 0;
};

/// Balance and optimized discarding with the affine basis g = (x, 1).
FigureResult run_fig3(const Fig3Options& options);

struct TimingOptions {
  std::vector<std::uint64_t> seeds;
  int total_samples = 200;
  std::vector<int> iterations = {10, 25, 50, 100, 200};
};

struct TimingCell {
  std::string scheme;
  int iterations = 0;
  int batch = 0;
  double seconds = 0.0;  // all runs, one thread
  bool all_finite = true;
  double mean_psi = 0.0;
};

/// Wall time of balance and optimized discarding at a fixed sample budget.
std::vector<TimingCell> run_timing(const TimingOptions& options);
void write_timing_json(const std::filesystem::path& path, const std::vector<TimingCell>& cells);

struct CounterexampleOptions {
  std::vector<std::uint64_t> seeds;
  int iterations = 100;
  int threads = 0;
};

inline constexpr double kCounterexampleThreshold = 0.1 * problems::kOneStepGaussianTruth;

/// Flat weights with the forced proposals u_k = k on the one-step Gaussian.
std::vector<ResultRow> run_counterexample(const CounterexampleOptions& options);

/// Fraction of runs whose final estimate falls below the threshold.
double fraction_below(const std::vector<ResultRow>& rows, double threshold);

void write_counterexample(const std::filesystem::path& dir, const std::vector<ResultRow>& rows);

/// Densities behind the counterexample: columns u,x,p_u,hq,hq_over_p_u.
void write_density_csv(const std::filesystem::path& path, const std::vector<double>& controls = {1, 2, 3, 7});

}  // namespace amis::experiments
