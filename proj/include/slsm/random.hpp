#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace slsm {

/// Engine used everywhere. mt19937_64 output is fixed by the standard, so any
/// value derived from it through the helpers below is bit-reproducible.
using Rng = std::mt19937_64;

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9E3779B97F4A7C15ull;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

/// Seed of stream `index` under `base_seed`. Depends only on the pair, so
/// trial k gets the same stream no matter how many trials run or in what order.
constexpr std::uint64_t derive_seed(std::uint64_t base_seed,
                                    std::uint64_t index) noexcept {
  return mix64(mix64(base_seed) ^ mix64(index + 0x632BE59BD9B4E019ull));
}

inline Rng make_stream(std::uint64_t base_seed, std::uint64_t index) {
  return Rng(derive_seed(base_seed, index));
}

/// Uniform on the open interval (0, 1) with 53 random bits.
inline double uniform_open(Rng& rng) {
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

/// Fair sign in {-1, +1}.
inline double random_sign(Rng& rng) { return (rng() >> 63) ? 1.0 : -1.0; }

/// Standard normal by the Marsaglia polar method. One value per call, the
/// partner variate is discarded so the stream position is a function of the
/// call count alone.
inline double standard_normal(Rng& rng) {
  for (;;) {
    const double u = 2.0 * uniform_open(rng) - 1.0;
    const double v = 2.0 * uniform_open(rng) - 1.0;
    const double s = u * u + v * v;
    if (s > 0.0 && s < 1.0) return u * std::sqrt(-2.0 * std::log(s) / s);
  }
}

}  // namespace slsm
