#pragma once

#include <cstdint>

namespace slcp {

// Deterministic 64-bit generator (splitmix64). The mapping to doubles is
// spelled out below so fixtures can be reproduced outside C++: standard
// library distributions are implementation-defined and must not be used
// anywhere reproducibility matters.
class SplitMix64 {
public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  // Uniform double in [0, 1): top 53 bits scaled by 2^-53.
  double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  // Uniform integer in [0, n): floor(u * n), clamped to n-1 for u -> 1.
  std::uint64_t next_below(std::uint64_t n) {
    std::uint64_t k = static_cast<std::uint64_t>(next_double() * static_cast<double>(n));
    return k >= n ? n - 1 : k;
  }

private:
  std::uint64_t state_;
};

// Independent substream k of a master seed. The substream seed is
// scramble(seed) xor (k+1)*0x9E3779B97F4A7C15, where scramble is one
// splitmix64 step; documented so other implementations can match draws.
inline SplitMix64 substream(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t base = SplitMix64(seed).next();
  return SplitMix64(base ^ ((stream + 1) * 0x9E3779B97F4A7C15ull));
}

}  // namespace slcp
