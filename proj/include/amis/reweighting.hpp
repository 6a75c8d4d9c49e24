#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "amis/execution.hpp"
#include "amis/kernels.hpp"
#include "amis/sde.hpp"
#include "amis/store.hpp"

namespace amis {

struct ReweightScheme {
  enum class Kind { Flat, Balance, DiscardFixed, DiscardOptimized, NonMixingLastBatch };
  enum class Candidates { All, PowersOfTwo };

  Kind kind = Kind::Flat;
  Candidates candidates = Candidates::All;  // DiscardOptimized only
  int min_retained = 2;                     // DiscardOptimized only

  static ReweightScheme flat() { return {Kind::Flat}; }
  static ReweightScheme balance() { return {Kind::Balance}; }
  static ReweightScheme discard_fixed() { return {Kind::DiscardFixed}; }
  static ReweightScheme discard_optimized(Candidates c = Candidates::All, int min_retained = 2) {
    return {Kind::DiscardOptimized, c, min_retained};
  }
  static ReweightScheme nonmixing() { return {Kind::NonMixingLastBatch}; }

  std::string name() const;
  void validate() const;
};

ReweightScheme::Kind parse_scheme_kind(const std::string& name);

struct EssReport {
  double ess_hat = 0.0;
  std::int64_t retained_samples = 0;
  int discard_time = 0;
};

/// (sum y)^2 / sum y^2. Throws UndefinedEstimateError when every y is zero.
double ess_estimate(std::span<const double> y);

/// Same estimator from log y values (entries may be -inf).
double ess_estimate_log(std::span<const double> log_y);

WeightAssignment flat_weights(const SampleStore& store);

/// Balance heuristic recomputed from every stored path and control: Theta(K^2 M).
WeightAssignment balance_weights(const DiffusionProblem& problem, const SampleStore& store,
                                 Execution execution = Execution::Serial);

/// Batches 1..t_k (1-based) get w = 0, later batches w = k / (k - t_k).
WeightAssignment discard_weights(const SampleStore& store, int discard_time);

/// ceil(k / 2), capped at k - 1.
int choose_fixed_discard(int k);

/// Discard times considered by the optimizer at iteration k.
std::vector<int> discard_candidates(int k, ReweightScheme::Candidates candidates);

struct DiscardChoice {
  int discard_time = 0;
  EssReport report;
  int ess_evaluations = 0;  // candidate scans plus the final report
};

/// Maximizes the ESS of the retained importance terms y = h dQ/dP over the
/// candidate discard times; ties go to the smallest discard time.
DiscardChoice choose_optimized_discard(const SampleStore& store, const ReweightScheme& scheme);

/// Only the latest batch is used, with w = N / N_K.
WeightAssignment nonmixing_weights(const SampleStore& store);

/// log of sum(h dQ/dP w) / normalizer. -inf when every weighted term is zero.
double log_estimate(const SampleStore& store, const WeightAssignment& weights);

/// ESS of y = h dQ/dP w over the samples with w > 0.
EssReport ess_report(const SampleStore& store, const WeightAssignment& weights);

/// Balance heuristic maintained across iterations. Each sample keeps the
/// running log-sum over controls of N_l dP_l/dP_k(x); appending batch K only
/// evaluates the new control on old samples and all controls on new samples,
/// Theta(K M) work per iteration.
class BalanceState {
 public:
  explicit BalanceState(Execution execution = Execution::Serial) : execution_(execution) {}

  void update(const DiffusionProblem& problem, const SampleStore& store);
  WeightAssignment weights(const SampleStore& store) const;

  std::int64_t cross_evaluations() const noexcept { return cross_evaluations_; }

 private:
  Execution execution_;
  int controls_seen_ = 0;
  std::vector<std::vector<kernels::LogSum>> rows_;
  std::int64_t cross_evaluations_ = 0;
};

}  // namespace amis
