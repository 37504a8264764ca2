#pragma once

#include <cstdint>

namespace minmarg {

/// splitmix64 stream; used wherever reproducible draws are needed so outputs
/// do not depend on the standard library's distribution implementations.
class SplitMix64 {
public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform double in [0, 1).
  double uniform01() { return (next() >> 11) * 0x1.0p-53; }

  /// Uniform double in [-1, 1).
  double uniform_pm1() { return 2.0 * uniform01() - 1.0; }

private:
  std::uint64_t state_;
};

/// Deterministic sub-stream seed for trial `index` of a base seed.
inline std::uint64_t subseed(std::uint64_t base, std::uint64_t index) {
  SplitMix64 mix(base ^ (0xa0761d6478bd642fULL + index));
  return mix.next();
}

}  // namespace minmarg
