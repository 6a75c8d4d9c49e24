#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <span>
#include <vector>

#include "amis/sde.hpp"

namespace amis {

/// A drawn path with its frozen importance data. Only `weight` changes after insertion.
struct WeightedSample {
  int iteration = 0;  // 0-based batch index
  int index = 0;
  double log_h = 0.0;
  double log_dqdp = 0.0;  // Girsanov log-weight at the generating control
  double cost = 0.0;      // S for cost-form problems, NaN otherwise
  double weight = 1.0;
  std::shared_ptr<const SamplePath> path;  // null once released

  // log(h dQ/dP_k), the unweighted importance term.
  double log_value() const noexcept { return log_h + log_dqdp; }
};

/// How sample paths are kept after generation.
///  Full   - every path stays in memory.
///  Replay - paths are dropped and regenerated from their (seed, k, n) stream on demand.
///  None   - paths are dropped; operations that need them fail with StructuralError.
enum class PathRetention { Full, Replay, None };

/// Log-domain summary of the importance terms y = h dQ/dP of one batch.
struct BatchStats {
  double max_log = -std::numeric_limits<double>::infinity();
  double sum = 0.0;     // sum exp(log_y - max_log)
  double sum_sq = 0.0;  // sum exp(2 (log_y - max_log))
};

BatchStats batch_stats(std::span<const WeightedSample> samples);

/// Re-weight factors for every sample plus the estimator denominator.
///
/// The estimate is sum(y * w) / normalizer. When `per_sample` is empty every
/// sample of batch l carries `batch_weight[l]`.
struct WeightAssignment {
  std::vector<double> batch_weight;
  std::vector<std::vector<double>> per_sample;
  double normalizer = 0.0;
  int discard_time = 0;

  bool uniform_per_batch() const noexcept { return per_sample.empty(); }
  double weight(int batch, int index) const {
    return uniform_per_batch() ? batch_weight[static_cast<std::size_t>(batch)]
                               : per_sample[static_cast<std::size_t>(batch)][static_cast<std::size_t>(index)];
  }
};

/// Append-only sample store; batch k was generated under the frozen control of batch k.
class SampleStore {
 public:
  struct Batch {
    FeedbackControl control;
    std::vector<WeightedSample> samples;
    BatchStats stats;
  };

  explicit SampleStore(PathRetention retention = PathRetention::Full);
  SampleStore(PathRetention retention, DiffusionProblem problem, std::uint64_t seed);

  void append_batch(FeedbackControl control, std::vector<WeightedSample> samples);

  int num_iterations() const noexcept { return static_cast<int>(batches_.size()); }
  std::int64_t total_samples() const noexcept { return total_; }
  bool empty() const noexcept { return total_ == 0; }

  const Batch& batch(int k) const { return batches_.at(static_cast<std::size_t>(k)); }
  const FeedbackControl& control(int k) const { return batch(k).control; }
  std::span<const Batch> batches() const noexcept { return batches_; }
  std::int64_t batch_size(int k) const { return static_cast<std::int64_t>(batch(k).samples.size()); }

  void apply(const WeightAssignment& weights);

  PathRetention retention() const noexcept { return retention_; }

  // The sample's path, regenerated from its stream under Replay.
  std::shared_ptr<const SamplePath> path(const WeightedSample& sample) const;

  // Drops stored paths of batch k unless retention is Full.
  void release_paths(int k);

 private:
  PathRetention retention_;
  std::optional<DiffusionProblem> problem_;
  std::uint64_t seed_ = 0;
  std::vector<Batch> batches_;
  std::int64_t total_ = 0;
};

}  // namespace amis
