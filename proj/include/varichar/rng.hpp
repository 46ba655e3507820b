// SPDX-License-Identifier: Apache-2.0
//
// Seeded random draws with a bit-exact definition. std::normal_distribution
// and friends are implementation-defined, so the transforms are spelled out
// here on top of std::mt19937_64, whose output sequence is fixed by the
// standard.
#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace varichar {

/// SplitMix64 finalizer; used to derive independent per-chip seeds.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) noexcept {
  return mix64(master ^ mix64(stream));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  /// Standard normal via Box-Muller (one value per call).
  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  /// Normal(mean, sigma) redrawn until strictly positive.
  double positive_normal(double mean, double sigma) {
    for (;;) {
      const double v = mean + sigma * normal();
      if (v > 0.0) return v;
    }
  }

  std::uint64_t next_u64() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace varichar
