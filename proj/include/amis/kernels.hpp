#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "amis/adaptation.hpp"
#include "amis/execution.hpp"
#include "amis/sde.hpp"
#include "amis/store.hpp"

// Data-parallel inner loops of the sampler. Each kernel has a serial
// reference and an OpenMP variant; results are written per item and reduced
// afterwards in (batch, index) order, so both variants agree bit for bit.
namespace amis::kernels {

/// Online log-sum-exp accumulator.
struct LogSum {
  double max = -std::numeric_limits<double>::infinity();
  double sum = 0.0;

  void add(double log_term) noexcept;
  double value() const noexcept;
};

// Draws `count` paths under `control` from streams (seed, iteration, n) and
// records log h, the Girsanov log-weight and (cost form) the path cost.
std::vector<WeightedSample> generate_batch_serial(const DiffusionProblem& problem, const FeedbackControl& control,
                                                  std::uint64_t seed, int iteration, int count);
std::vector<WeightedSample> generate_batch_parallel(const DiffusionProblem& problem,
                                                    const FeedbackControl& control, std::uint64_t seed,
                                                    int iteration, int count);
std::vector<WeightedSample> generate_batch(const DiffusionProblem& problem, const FeedbackControl& control,
                                           std::uint64_t seed, int iteration, int count, Execution execution);

// Folds log N_l + log dP_l/dP_k(x) for controls l in [control_begin, control_end)
// into rows[i] for the i-th task's sample x drawn from P_k.
struct BalanceTask {
  int batch = 0;
  int index = 0;
  int control_begin = 0;
  int control_end = 0;
};

void balance_terms_serial(const DiffusionProblem& problem, const SampleStore& store,
                          std::span<const BalanceTask> tasks, std::span<LogSum> rows);
void balance_terms_parallel(const DiffusionProblem& problem, const SampleStore& store,
                            std::span<const BalanceTask> tasks, std::span<LogSum> rows);
void balance_terms(const DiffusionProblem& problem, const SampleStore& store, std::span<const BalanceTask> tasks,
                   std::span<LogSum> rows, Execution execution);

// Unweighted path moments of each listed sample under its generating control.
std::vector<PathMoments> moments_serial(const DiffusionProblem& problem, const SampleStore& store,
                                        std::span<const WeightedSample* const> samples, const Basis& basis);
std::vector<PathMoments> moments_parallel(const DiffusionProblem& problem, const SampleStore& store,
                                          std::span<const WeightedSample* const> samples, const Basis& basis);
std::vector<PathMoments> moments(const DiffusionProblem& problem, const SampleStore& store,
                                 std::span<const WeightedSample* const> samples, const Basis& basis,
                                 Execution execution);

}  // namespace amis::kernels
