#include "amis/store.hpp"

#include <cmath>

#include "amis/error.hpp"

namespace amis {

BatchStats batch_stats(std::span<const WeightedSample> samples) {
  BatchStats stats;
  for (const auto& s : samples) stats.max_log = std::max(stats.max_log, s.log_value());
  if (!std::isfinite(stats.max_log)) return stats;
  for (const auto& s : samples) {
    const double e = std::exp(s.log_value() - stats.max_log);
    stats.sum += e;
    stats.sum_sq += e * e;
  }
  return stats;
}

SampleStore::SampleStore(PathRetention retention) : retention_(retention) {
  if (retention_ == PathRetention::Replay) {
    throw ConfigError("replay retention needs the problem and seed the paths were drawn with");
  }
}

SampleStore::SampleStore(PathRetention retention, DiffusionProblem problem, std::uint64_t seed)
    : retention_(retention), problem_(std::move(problem)), seed_(seed) {}

void SampleStore::append_batch(FeedbackControl control, std::vector<WeightedSample> samples) {
  const int k = num_iterations();
  for (std::size_t n = 0; n < samples.size(); ++n) {
    if (samples[n].iteration != k || samples[n].index != static_cast<int>(n)) {
      throw StructuralError("batch samples must be labelled with their (iteration, index)");
    }
    if (samples[n].weight < 0.0) throw StructuralError("sample weights must be nonnegative");
  }
  BatchStats stats = batch_stats(samples);
  total_ += static_cast<std::int64_t>(samples.size());
  batches_.push_back(Batch{std::move(control), std::move(samples), stats});
}

void SampleStore::apply(const WeightAssignment& weights) {
  for (auto& b : batches_) {
    for (auto& s : b.samples) s.weight = weights.weight(s.iteration, s.index);
  }
}

std::shared_ptr<const SamplePath> SampleStore::path(const WeightedSample& sample) const {
  if (sample.path) return sample.path;
  if (retention_ == PathRetention::Replay) {
    return std::make_shared<const SamplePath>(
        simulate_path(*problem_, control(sample.iteration), seed_, sample.iteration, sample.index));
  }
  throw StructuralError("sample path was not retained; noise increments are unavailable");
}

void SampleStore::release_paths(int k) {
  if (retention_ == PathRetention::Full) return;
  for (auto& s : batches_.at(static_cast<std::size_t>(k)).samples) s.path.reset();
}

}  // namespace amis
