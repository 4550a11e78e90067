#pragma once

#include <cstdint>

namespace npi {

/// Stateless counter-based generator: every draw is a pure function of
/// (seed, stream, counter). Parallel consumers can index draws directly
/// without sharing state, so results never depend on scheduling.
class CounterRng {
 public:
  constexpr CounterRng(std::uint64_t seed, std::uint64_t stream = 0) noexcept
      : seed_(seed), stream_(stream) {}

  constexpr std::uint64_t bits(std::uint64_t counter) const noexcept {
    std::uint64_t z = mix(seed_ + 0x9E3779B97F4A7C15ULL * (stream_ + 1));
    return mix(z ^ (counter + 0xD1B54A32D192ED03ULL));
  }

  /// Uniform on [0, 1) with 53 random bits.
  constexpr double unit(std::uint64_t counter) const noexcept {
    return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
  }

  constexpr double uniform(std::uint64_t counter, double lo, double hi) const noexcept {
    return lo + (hi - lo) * unit(counter);
  }

  constexpr CounterRng substream(std::uint64_t s) const noexcept {
    return CounterRng(bits(~s), s);
  }

  constexpr std::uint64_t seed() const noexcept { return seed_; }

 private:
  // splitmix64 finalizer
  static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t seed_;
  std::uint64_t stream_;
};

}  // namespace npi
