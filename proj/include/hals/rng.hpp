#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <random>

#include "hals/types.hpp"

namespace hals {

/// splitmix64 finalizer, used to whiten raw seed material.
constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derive a child seed from (parent, index). Chained for deeper hierarchies:
/// every Monte Carlo trial owns an independent stream keyed off the master
/// seed, and each trial splits again into channel/pilot/noise streams.
constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t index) {
  return splitmix64(splitmix64(parent) ^ splitmix64(index + 0x1234567855aa55aaULL));
}

constexpr std::uint64_t derive_seed(std::uint64_t parent, std::uint64_t a,
                                    std::uint64_t b) {
  return derive_seed(derive_seed(parent, a), b);
}

/// Seedable PRNG with explicit, engine-independent output mappings.
/// All distributions are built from the raw 64-bit stream (never from
/// std::*_distribution), so a fixed seed reproduces bit-identical draws on
/// every platform with IEEE doubles.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(splitmix64(seed)) {}

  std::uint64_t next_u64() { return eng_(); }

  /// Uniform on [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Circularly symmetric complex Gaussian CN(0, var): real and imaginary
  /// parts are independent N(0, var/2), so E|x|^2 = var. One Box-Muller
  /// pair per draw; consumes exactly two uniforms.
  cx cnormal(double var) {
    const double u1 = uniform();
    const double u2 = uniform();
    // |x|^2 = var * Exp(1), phase uniform.
    const double amp = std::sqrt(-var * std::log1p(-u1));  // -ln(1-u1) avoids log(0)
    return {amp * std::cos(kTwoPi * u2), amp * std::sin(kTwoPi * u2)};
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace hals
