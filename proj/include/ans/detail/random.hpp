#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <random>

namespace ans::detail {

// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Derives an independent stream seed from a base seed and a tuple of
/// coordinates, so draws are addressable by (seed, t, p, ...) rather than by
/// call order.
inline std::uint64_t stream_seed(std::uint64_t seed,
                                 std::initializer_list<std::uint64_t> keys) noexcept {
  std::uint64_t h = mix64(seed);
  for (auto k : keys) h = mix64(h ^ mix64(k + 0x632be59bd9b4e019ULL));
  return h;
}

inline std::mt19937_64 make_engine(std::uint64_t seed,
                                   std::initializer_list<std::uint64_t> keys) {
  return std::mt19937_64{stream_seed(seed, keys)};
}

/// Uniform in [0, 1) with 53 bits of resolution.
inline double uniform01(std::mt19937_64& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

/// Standard normal truncated to [-bound, bound] by rejection. A non-positive
/// bound collapses to 0.
inline double truncated_standard_normal(std::mt19937_64& eng, double bound) {
  if (!(bound > 0.0)) return 0.0;
  std::normal_distribution<double> normal{0.0, 1.0};
  for (;;) {
    double z = normal(eng);
    if (std::abs(z) <= bound) return z;
  }
}

}  // namespace ans::detail
