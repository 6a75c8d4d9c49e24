#include <vector>

#include <benchmark/benchmark.h>

#include "amis/kernels.hpp"
#include "amis/problems.hpp"
#include "amis/store.hpp"

namespace {

using namespace amis;

FeedbackControl tilt(double a) { return FeedbackControl::constant(Eigen::VectorXd::Constant(3, a)); }

SampleStore filled_store(const DiffusionProblem& problem, int iterations, int batch) {
  SampleStore store(PathRetention::Full);
  for (int k = 0; k < iterations; ++k) {
    auto control = tilt(0.1 * k);
    store.append_batch(control, kernels::generate_batch_serial(problem, control, 7, k, batch));
  }
  return store;
}

template <Execution E>
void BM_GenerateBatch(benchmark::State& state) {
  const auto problem = problems::gaussian_target();
  const auto control = tilt(1.0);
  const int count = static_cast<int>(state.range(0));
  for (auto _ : state) {
    benchmark::DoNotOptimize(kernels::generate_batch(problem, control, 1, 0, count, E));
  }
  state.SetItemsProcessed(state.iterations() * count);
}

template <Execution E>
void BM_BalanceTerms(benchmark::State& state) {
  const auto problem = problems::gaussian_target();
  const int K = static_cast<int>(state.range(0));
  const auto store = filled_store(problem, K, 4);
  std::vector<kernels::BalanceTask> tasks;
  for (int b = 0; b < K; ++b) {
    for (int n = 0; n < 4; ++n) tasks.push_back({b, n, 0, K});
  }
  std::vector<kernels::LogSum> rows(tasks.size());
  for (auto _ : state) {
    std::fill(rows.begin(), rows.end(), kernels::LogSum{});
    kernels::balance_terms(problem, store, tasks, rows, E);
    benchmark::DoNotOptimize(rows.data());
  }
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(tasks.size()) * K);
}

template <Execution E>
void BM_Moments(benchmark::State& state) {
  const auto problem = problems::gaussian_target();
  const auto basis = Basis::affine(3);
  const auto store = filled_store(problem, static_cast<int>(state.range(0)), 4);
  std::vector<const WeightedSample*> samples;
  for (const auto& b : store.batches()) {
    for (const auto& s : b.samples) samples.push_back(&s);
  }
  for (auto _ : state) benchmark::DoNotOptimize(kernels::moments(problem, store, samples, basis, E));
  state.SetItemsProcessed(state.iterations() * static_cast<std::int64_t>(samples.size()));
}

BENCHMARK(BM_GenerateBatch<Execution::Serial>)->Arg(64)->Arg(1024);
BENCHMARK(BM_GenerateBatch<Execution::Parallel>)->Arg(64)->Arg(1024);
BENCHMARK(BM_BalanceTerms<Execution::Serial>)->Arg(16)->Arg(64);
BENCHMARK(BM_BalanceTerms<Execution::Parallel>)->Arg(16)->Arg(64);
BENCHMARK(BM_Moments<Execution::Serial>)->Arg(16)->Arg(128);
BENCHMARK(BM_Moments<Execution::Parallel>)->Arg(16)->Arg(128);

}  // namespace

BENCHMARK_MAIN();
