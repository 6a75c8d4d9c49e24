#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace amis {

/// Counter-based random stream addressed by (seed, iteration, sample).
///
/// Every sample path owns an independent stream, so a path can be regenerated
/// bit-identically from its key regardless of the order or thread in which
/// paths were originally drawn. Raw 64-bit words are produced by hashing the
/// key and a running counter with the SplitMix64 finalizer.
class PathStream {
 public:
  using result_type = std::uint64_t;

  PathStream(std::uint64_t seed, std::uint64_t iteration, std::uint64_t sample);

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()();

  double standard_normal() { return normal_(*this); }

  std::uint64_t key() const noexcept { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

}  // namespace amis
