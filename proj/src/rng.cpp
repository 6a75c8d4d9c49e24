#include "amis/rng.hpp"

namespace amis {

namespace {
constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}

std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += kGolden;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

PathStream::PathStream(std::uint64_t seed, std::uint64_t iteration, std::uint64_t sample)
    : key_(splitmix64(splitmix64(splitmix64(seed) ^ iteration) ^ (sample * kGolden))) {}

PathStream::result_type PathStream::operator()() {
  ++counter_;
  return splitmix64(key_ + counter_ * kGolden);
}

}  // namespace amis
