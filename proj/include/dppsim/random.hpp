#pragma once

#include <cstdint>
#include <random>

namespace dppsim {

// Seeded 64-bit generator. mt19937_64's output sequence is pinned down by the
// standard, so results are reproducible across platforms for a given seed.
class RandomSource {
 public:
  explicit RandomSource(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform double in [0, 1) with 53 random bits; avoids
  // std::uniform_real_distribution, whose output is implementation-defined.
  double uniform01() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Independent stream for run `index` of an ensemble with base seed `base`.
  static RandomSource for_run(std::uint64_t base, std::uint64_t index) {
    return RandomSource(base + index);
  }

 private:
  std::mt19937_64 engine_;
};

}  // namespace dppsim
