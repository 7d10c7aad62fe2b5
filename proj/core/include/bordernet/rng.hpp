#pragma once

#include <cstdint>
#include <random>

namespace bordernet {

/// Portable pseudo-random source.
///
/// The engine is std::mt19937_64, whose output sequence is fixed by the C++
/// standard. Conversions to floats and bounded integers are done here rather
/// than through <random> distributions, whose algorithms are unspecified and
/// differ between standard libraries. A stream key is folded into the seed
/// with SplitMix64 so independent streams (filter index, epoch, layer) never
/// share a state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(mix(seed)) {}
  Rng(std::uint64_t seed, std::uint64_t stream) : engine_(mix(mix(seed) ^ (stream * 0x9E3779B97F4A7C15ULL + 1))) {}

  std::uint64_t next_u64() { return engine_(); }

  /// Uniform on [0, 1): top 24 bits of one draw, exactly representable as float.
  float uniform01() { return static_cast<float>(engine_() >> 40) * 0x1.0p-24f; }

  /// Uniform on [lo, hi).
  float uniform(float lo, float hi) { return lo + (hi - lo) * uniform01(); }

  /// Uniform integer on [0, n); rejection sampling keeps it unbiased.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t x = engine_();
    while (x >= limit) x = engine_();
    return x % n;
  }

  static std::uint64_t mix(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace bordernet
