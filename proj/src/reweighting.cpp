#include "amis/reweighting.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "amis/error.hpp"

namespace amis {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require_nonempty(const SampleStore& store) {
  if (store.empty()) throw StructuralError("sample store is empty");
}

double clamp_ess(double ess, double count) { return std::clamp(ess, 1.0, count); }

// Suffix accumulator over batch stats: sum y and sum y^2 in log domain.
struct SuffixSums {
  kernels::LogSum first;
  kernels::LogSum second;

  void add(const BatchStats& s, double log_w) {
    if (s.sum <= 0.0) return;
    first.add(log_w + s.max_log + std::log(s.sum));
    second.add(2.0 * log_w + 2.0 * s.max_log + std::log(s.sum_sq));
  }
  bool positive() const { return first.sum > 0.0; }
  double ess() const { return std::exp(2.0 * first.value() - second.value()); }
};

}  // namespace

std::string ReweightScheme::name() const {
  switch (kind) {
    case Kind::Flat:
      return "flat";
    case Kind::Balance:
      return "balance";
    case Kind::DiscardFixed:
      return "discard_fixed";
    case Kind::DiscardOptimized:
      return "discard_optimized";
    case Kind::NonMixingLastBatch:
      return "nonmixing";
  }
  return "unknown";
}

void ReweightScheme::validate() const {
  if (kind == Kind::DiscardOptimized && min_retained < 2) {
    throw ConfigError("optimized discarding needs min_retained >= 2");
  }
}

ReweightScheme::Kind parse_scheme_kind(const std::string& name) {
  using K = ReweightScheme::Kind;
  if (name == "flat") return K::Flat;
  if (name == "balance") return K::Balance;
  if (name == "discard_fixed") return K::DiscardFixed;
  if (name == "discard_optimized") return K::DiscardOptimized;
  if (name == "nonmixing") return K::NonMixingLastBatch;
  throw ConfigError("unknown re-weighting scheme '" + name + "'");
}

double ess_estimate_log(std::span<const double> log_y) {
  double max_log = kNegInf;
  for (double v : log_y) max_log = std::max(max_log, v);
  if (!(max_log > kNegInf)) throw UndefinedEstimateError("ESS is undefined when every weighted value is zero");
  double s1 = 0.0;
  double s2 = 0.0;
  for (double v : log_y) {
    const double e = std::exp(v - max_log);
    s1 += e;
    s2 += e * e;
  }
  return clamp_ess(s1 * s1 / s2, static_cast<double>(log_y.size()));
}

double ess_estimate(std::span<const double> y) {
  std::vector<double> log_y(y.size());
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (y[i] < 0.0 || std::isnan(y[i])) throw StructuralError("ESS needs nonnegative weighted values");
    log_y[i] = std::log(y[i]);
  }
  return ess_estimate_log(log_y);
}

WeightAssignment flat_weights(const SampleStore& store) {
  require_nonempty(store);
  WeightAssignment w;
  w.batch_weight.assign(static_cast<std::size_t>(store.num_iterations()), 1.0);
  w.normalizer = static_cast<double>(store.total_samples());
  return w;
}

WeightAssignment balance_weights(const DiffusionProblem& problem, const SampleStore& store, Execution execution) {
  require_nonempty(store);
  BalanceState state(execution);
  state.update(problem, store);
  return state.weights(store);
}

WeightAssignment discard_weights(const SampleStore& store, int discard_time) {
  require_nonempty(store);
  const int k = store.num_iterations();
  if (discard_time < 0 || discard_time >= k) {
    throw ConfigError("invalid discard time " + std::to_string(discard_time) + " at iteration " +
                      std::to_string(k));
  }
  const double factor = static_cast<double>(k) / static_cast<double>(k - discard_time);
  WeightAssignment w;
  w.batch_weight.assign(static_cast<std::size_t>(k), 0.0);
  std::int64_t retained = 0;
  for (int b = discard_time; b < k; ++b) {
    w.batch_weight[static_cast<std::size_t>(b)] = factor;
    retained += store.batch_size(b);
  }
  w.normalizer = factor * static_cast<double>(retained);
  w.discard_time = discard_time;
  return w;
}

int choose_fixed_discard(int k) {
  if (k < 1) throw ConfigError("iteration count must be positive");
  return std::min((k + 1) / 2, k - 1);
}

std::vector<int> discard_candidates(int k, ReweightScheme::Candidates candidates) {
  if (k < 1) throw ConfigError("iteration count must be positive");
  std::vector<int> out;
  if (candidates == ReweightScheme::Candidates::All) {
    for (int t = 0; t < k; ++t) out.push_back(t);
    return out;
  }
  out.push_back(0);
  for (int t = 2; t <= k - 1; t *= 2) out.push_back(t);
  return out;
}

DiscardChoice choose_optimized_discard(const SampleStore& store, const ReweightScheme& scheme) {
  scheme.validate();
  require_nonempty(store);
  const int k = store.num_iterations();
  const auto candidates = discard_candidates(k, scheme.candidates);

  std::vector<char> is_candidate(static_cast<std::size_t>(k), 0);
  for (int t : candidates) is_candidate[static_cast<std::size_t>(t)] = 1;

  DiscardChoice choice;
  double best = -1.0;
  bool found = false;
  SuffixSums suffix;
  std::int64_t retained = 0;
  for (int b = k - 1; b >= 0; --b) {
    suffix.add(store.batch(b).stats, 0.0);
    retained += store.batch_size(b);
    if (!is_candidate[static_cast<std::size_t>(b)] || retained < scheme.min_retained) continue;
    if (!suffix.positive()) continue;
    ++choice.ess_evaluations;
    const double ess = suffix.ess();
    if (ess >= best) {
      best = ess;
      choice.discard_time = b;
      found = true;
    }
  }
  if (!found) throw ConfigError("no admissible discard time at iteration " + std::to_string(k));

  const auto weights = discard_weights(store, choice.discard_time);
  choice.report = ess_report(store, weights);
  ++choice.ess_evaluations;
  return choice;
}

WeightAssignment nonmixing_weights(const SampleStore& store) {
  require_nonempty(store);
  const int k = store.num_iterations();
  WeightAssignment w;
  w.batch_weight.assign(static_cast<std::size_t>(k), 0.0);
  w.batch_weight.back() =
      static_cast<double>(store.total_samples()) / static_cast<double>(store.batch_size(k - 1));
  w.normalizer = static_cast<double>(store.total_samples());
  w.discard_time = k - 1;
  return w;
}

double log_estimate(const SampleStore& store, const WeightAssignment& weights) {
  kernels::LogSum total;
  if (weights.uniform_per_batch()) {
    for (int b = 0; b < store.num_iterations(); ++b) {
      const double w = weights.batch_weight[static_cast<std::size_t>(b)];
      const auto& s = store.batch(b).stats;
      if (w > 0.0 && s.sum > 0.0) total.add(std::log(w) + s.max_log + std::log(s.sum));
    }
  } else {
    for (const auto& batch : store.batches()) {
      for (const auto& s : batch.samples) {
        const double w = weights.weight(s.iteration, s.index);
        if (w > 0.0) total.add(s.log_value() + std::log(w));
      }
    }
  }
  return total.value() - std::log(weights.normalizer);
}

EssReport ess_report(const SampleStore& store, const WeightAssignment& weights) {
  EssReport report;
  report.discard_time = weights.discard_time;
  if (weights.uniform_per_batch()) {
    SuffixSums sums;
    for (int b = 0; b < store.num_iterations(); ++b) {
      const double w = weights.batch_weight[static_cast<std::size_t>(b)];
      if (w <= 0.0) continue;
      report.retained_samples += store.batch_size(b);
      sums.add(store.batch(b).stats, std::log(w));
    }
    if (!sums.positive()) throw UndefinedEstimateError("ESS is undefined when every weighted value is zero");
    report.ess_hat = clamp_ess(sums.ess(), static_cast<double>(report.retained_samples));
    return report;
  }
  std::vector<double> log_y;
  log_y.reserve(static_cast<std::size_t>(store.total_samples()));
  for (const auto& batch : store.batches()) {
    for (const auto& s : batch.samples) {
      const double w = weights.weight(s.iteration, s.index);
      if (w <= 0.0) continue;
      log_y.push_back(s.log_value() + std::log(w));
    }
  }
  report.retained_samples = static_cast<std::int64_t>(log_y.size());
  report.ess_hat = ess_estimate_log(log_y);
  return report;
}

void BalanceState::update(const DiffusionProblem& problem, const SampleStore& store) {
  const int k = store.num_iterations();
  if (k < controls_seen_) throw StructuralError("balance state is ahead of the sample store");
  if (k == controls_seen_) return;

  std::vector<kernels::BalanceTask> tasks;
  std::vector<kernels::LogSum> rows;
  rows_.resize(static_cast<std::size_t>(k));
  for (int b = 0; b < k; ++b) {
    const auto n = store.batch_size(b);
    auto& batch_rows = rows_[static_cast<std::size_t>(b)];
    const bool fresh = b >= controls_seen_;
    if (fresh) batch_rows.assign(static_cast<std::size_t>(n), kernels::LogSum{});
    const int begin = fresh ? 0 : controls_seen_;
    for (int i = 0; i < static_cast<int>(n); ++i) {
      tasks.push_back({b, i, begin, k});
      rows.push_back(batch_rows[static_cast<std::size_t>(i)]);
      cross_evaluations_ += (b >= begin && b < k) ? (k - begin - 1) : (k - begin);
    }
  }
  kernels::balance_terms(problem, store, tasks, rows, execution_);
  for (std::size_t i = 0; i < tasks.size(); ++i) {
    rows_[static_cast<std::size_t>(tasks[i].batch)][static_cast<std::size_t>(tasks[i].index)] = rows[i];
  }
  controls_seen_ = k;
}

WeightAssignment BalanceState::weights(const SampleStore& store) const {
  if (store.num_iterations() != controls_seen_) throw StructuralError("balance state is out of date");
  WeightAssignment w;
  const double log_total = std::log(static_cast<double>(store.total_samples()));
  w.per_sample.resize(rows_.size());
  for (std::size_t b = 0; b < rows_.size(); ++b) {
    w.per_sample[b].reserve(rows_[b].size());
    for (const auto& row : rows_[b]) w.per_sample[b].push_back(std::exp(log_total - row.value()));
  }
  w.normalizer = static_cast<double>(store.total_samples());
  return w;
}

}  // namespace amis
