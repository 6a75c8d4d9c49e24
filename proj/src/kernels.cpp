#include "amis/kernels.hpp"

#include <cmath>
#include <exception>
#include <memory>

namespace amis::kernels {

namespace {

WeightedSample draw_one(const DiffusionProblem& problem, const FeedbackControl& control, std::uint64_t seed,
                        int iteration, int n) {
  auto path = std::make_shared<const SamplePath>(simulate_path(problem, control, seed, iteration, n));
  WeightedSample s;
  s.iteration = iteration;
  s.index = n;
  s.log_h = problem.log_h(*path);
  s.log_dqdp = girsanov_log_weight(problem, *path, control);
  s.cost = problem.has_cost_form() ? path_cost(problem, *path, control) : std::nan("");
  s.weight = 1.0;
  s.path = std::move(path);
  return s;
}

double balance_term(const DiffusionProblem& problem, const SampleStore& store, const WeightedSample& sample,
                    const SamplePath& path, int l) {
  const double log_count = std::log(static_cast<double>(store.batch_size(l)));
  if (l == sample.iteration) return log_count;
  return log_count + cross_log_ratio(problem, path, store.control(sample.iteration), store.control(l));
}

void balance_task(const DiffusionProblem& problem, const SampleStore& store, const BalanceTask& task,
                  LogSum& row) {
  const auto& sample = store.batch(task.batch).samples.at(static_cast<std::size_t>(task.index));
  const auto path = store.path(sample);
  for (int l = task.control_begin; l < task.control_end; ++l) {
    row.add(balance_term(problem, store, sample, *path, l));
  }
}

PathMoments moment_of(const DiffusionProblem& problem, const SampleStore& store, const WeightedSample& sample,
                      const Basis& basis) {
  const auto path = store.path(sample);
  return path_moments(problem, *path, store.control(sample.iteration), basis);
}

// Runs body(i) for i in [0, n) on OpenMP threads and rethrows the first
// exception in index order.
template <typename Body>
void parallel_for(std::size_t n, Body&& body) {
  std::vector<std::exception_ptr> errors(n);
  const auto count = static_cast<std::int64_t>(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      errors[static_cast<std::size_t>(i)] = std::current_exception();
    }
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

void LogSum::add(double log_term) noexcept {
  if (log_term == -std::numeric_limits<double>::infinity()) return;
  if (log_term <= max) {
    sum += std::exp(log_term - max);
  } else {
    sum = sum * std::exp(max - log_term) + 1.0;
    max = log_term;
  }
}

double LogSum::value() const noexcept {
  if (sum == 0.0) return -std::numeric_limits<double>::infinity();
  return max + std::log(sum);
}

std::vector<WeightedSample> generate_batch_serial(const DiffusionProblem& problem, const FeedbackControl& control,
                                                  std::uint64_t seed, int iteration, int count) {
  std::vector<WeightedSample> out;
  out.reserve(static_cast<std::size_t>(count));
  for (int n = 0; n < count; ++n) out.push_back(draw_one(problem, control, seed, iteration, n));
  return out;
}

std::vector<WeightedSample> generate_batch_parallel(const DiffusionProblem& problem,
                                                    const FeedbackControl& control, std::uint64_t seed,
                                                    int iteration, int count) {
  std::vector<WeightedSample> out(static_cast<std::size_t>(count));
  parallel_for(out.size(), [&](std::size_t n) {
    out[n] = draw_one(problem, control, seed, iteration, static_cast<int>(n));
  });
  return out;
}

std::vector<WeightedSample> generate_batch(const DiffusionProblem& problem, const FeedbackControl& control,
                                           std::uint64_t seed, int iteration, int count, Execution execution) {
  return execution == Execution::Parallel ? generate_batch_parallel(problem, control, seed, iteration, count)
                                          : generate_batch_serial(problem, control, seed, iteration, count);
}

void balance_terms_serial(const DiffusionProblem& problem, const SampleStore& store,
                          std::span<const BalanceTask> tasks, std::span<LogSum> rows) {
  for (std::size_t i = 0; i < tasks.size(); ++i) balance_task(problem, store, tasks[i], rows[i]);
}

void balance_terms_parallel(const DiffusionProblem& problem, const SampleStore& store,
                            std::span<const BalanceTask> tasks, std::span<LogSum> rows) {
  parallel_for(tasks.size(), [&](std::size_t i) { balance_task(problem, store, tasks[i], rows[i]); });
}

void balance_terms(const DiffusionProblem& problem, const SampleStore& store, std::span<const BalanceTask> tasks,
                   std::span<LogSum> rows, Execution execution) {
  if (execution == Execution::Parallel) {
    balance_terms_parallel(problem, store, tasks, rows);
  } else {
    balance_terms_serial(problem, store, tasks, rows);
  }
}

std::vector<PathMoments> moments_serial(const DiffusionProblem& problem, const SampleStore& store,
                                        std::span<const WeightedSample* const> samples, const Basis& basis) {
  std::vector<PathMoments> out;
  out.reserve(samples.size());
  for (const auto* s : samples) out.push_back(moment_of(problem, store, *s, basis));
  return out;
}

std::vector<PathMoments> moments_parallel(const DiffusionProblem& problem, const SampleStore& store,
                                          std::span<const WeightedSample* const> samples, const Basis& basis) {
  std::vector<PathMoments> out(samples.size());
  parallel_for(samples.size(), [&](std::size_t i) { out[i] = moment_of(problem, store, *samples[i], basis); });
  return out;
}

std::vector<PathMoments> moments(const DiffusionProblem& problem, const SampleStore& store,
                                 std::span<const WeightedSample* const> samples, const Basis& basis,
                                 Execution execution) {
  return execution == Execution::Parallel ? moments_parallel(problem, store, samples, basis)
                                          : moments_serial(problem, store, samples, basis);
}

}  // namespace amis::kernels
