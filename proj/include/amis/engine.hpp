#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "amis/adaptation.hpp"
#include "amis/execution.hpp"
#include "amis/reweighting.hpp"
#include "amis/sde.hpp"
#include "amis/store.hpp"

namespace amis {

/// Path integral adaptation: u_k = A_k g with A_k = F_k G_k^{-1} from the
/// re-weighted samples of iterations before k. u_1 = 0.
struct PathIntegralAdaptation {
  Basis basis = Basis::constant();
  AdaptationMode mode = AdaptationMode::FullRecompute;
  std::optional<double> clamp_bound;
  SolvePolicy policy;
};

/// The same control at every iteration (no adaptation).
struct FixedControl {
  FeedbackControl control;
};

/// Control prescribed per iteration, k = 1, 2, ...
struct ForcedControls {
  std::function<FeedbackControl(int k)> control_for;
};

using AdaptationStrategy = std::variant<PathIntegralAdaptation, FixedControl, ForcedControls>;

struct AmisConfig {
  ReweightScheme scheme;
  AdaptationStrategy adaptation;
  std::vector<int> schedule;  // N_1 .. N_K
  std::uint64_t seed = 0;
  Execution execution = Execution::Serial;
  std::optional<PathRetention> retention;  // chosen from scheme and adaptation when unset

  static std::vector<int> constant_schedule(int iterations, int batch) {
    return std::vector<int>(static_cast<std::size_t>(iterations), batch);
  }
};

struct PhaseTimes {
  std::int64_t adapt_ns = 0;
  std::int64_t generate_ns = 0;
  std::int64_t reweight_ns = 0;
};

struct IterationOutput {
  int k = 0;  // 1-based
  std::int64_t total_samples = 0;
  double psi_hat = 0.0;
  double j_hat = 0.0;  // NaN for problems without cost form
  EssReport ess;
  Eigen::MatrixXd params_A;  // parameters of the control used at this iteration
  std::chrono::nanoseconds wall_time{0};
  PhaseTimes phases;
};

struct AmisResult {
  std::vector<IterationOutput> iterations;
  FeedbackControl final_control;  // adaptation applied once more after the last re-weighting
};

/// Adaptive multiple importance sampler: adaptation, generation,
/// re-weighting and output, one iteration per `step()`.
class AmisSampler {
 public:
  AmisSampler(DiffusionProblem problem, AmisConfig config);

  IterationOutput step();
  bool done() const noexcept { return store_.num_iterations() >= static_cast<int>(config_.schedule.size()); }

  // Control the next adaptation step would propose.
  FeedbackControl final_control();

  const SampleStore& store() const noexcept { return store_; }
  const WeightAssignment& weights() const noexcept { return weights_; }
  const DiffusionProblem& problem() const noexcept { return problem_; }
  const AmisConfig& config() const noexcept { return config_; }

 private:
  FeedbackControl propose(int k);
  EssReport reweight();

  DiffusionProblem problem_;
  AmisConfig config_;
  SampleStore store_;
  WeightAssignment weights_;
  std::optional<PathIntegralAdapter> adapter_;
  BalanceState balance_;
};

AmisResult run_amis(const DiffusionProblem& problem, const AmisConfig& config);

/// -log( sum(exp(-S) w) / normalizer ), for problems in cost form.
double free_energy(const SampleStore& store, const WeightAssignment& weights);

struct SignedEstimate {
  double estimate = 0.0;       // E[h+ + 1] - E[h- + 1]
  double positive_part = 0.0;  // estimate of E[h+ + 1]
  double negative_part = 0.0;  // estimate of E[h- + 1]
};

/// Estimates E_Q[h] for a signed functional by running two independent
/// samplers on h+ + 1 and h- + 1 and differencing the final estimates.
SignedEstimate estimate_signed(const DiffusionProblem& problem, const AmisConfig& config);

}  // namespace amis
