// Copyright (c) 2026 The lapeig Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <span>
#include <utility>

namespace lapeig {

/// SplitMix64 finalizer (Steele, Lea & Flood 2014). Bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Child seed for stream or example `index` under `root`: mix64(root ^ mix64(index)).
constexpr std::uint64_t derive_seed(std::uint64_t root, std::uint64_t index) noexcept {
  return mix64(root ^ mix64(index));
}

/// Named stream indices used with derive_seed so each consumer of the root
/// seed draws from an independent sequence.
namespace streams {
inline constexpr std::uint64_t split = 0x5350'4C49'54ULL;        // "SPLIT"
inline constexpr std::uint64_t subsample = 0x5355'4253'414DULL;  // "SUBSAM"
inline constexpr std::uint64_t fraction = 0x4652'4143ULL;        // "FRAC"
inline constexpr std::uint64_t perturb_columns = 0x5043'4F4CULL; // "PCOL"
inline constexpr std::uint64_t perturb_noise = 0x504E'4F49ULL;   // "PNOI"
inline constexpr std::uint64_t generate = 0x4745'4EULL;          // "GEN"
inline constexpr std::uint64_t probe = 0x5052'4F42ULL;           // "PROB"
}  // namespace streams

/// SplitMix64 generator, version 1: 64-bit state advanced by the golden-ratio
/// increment, output through mix64. All variate transforms below are fixed
/// so draws are reproducible across platforms and standard libraries.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}

  std::uint64_t next() noexcept {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix64(state_);
  }

  /// Uniform on the open interval (0, 1), 53-bit resolution.
  double uniform_open() noexcept {
    return (static_cast<double>(next() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Uniform integer in [0, bound) by rejection; bound must be > 0.
  std::uint64_t below(std::uint64_t bound) noexcept {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = next();
      if (r >= threshold) return r % bound;
    }
  }

  /// Unit-rate exponential, strictly positive.
  double exponential() noexcept;

  /// Standard normal via Box-Muller (cosine branch only, one variate per call).
  double normal() noexcept;

  /// Gamma(shape, 1). shape == 1 reduces to exponential(); otherwise Marsaglia-Tsang.
  double gamma(double shape) noexcept;

  std::uint64_t state() const noexcept { return state_; }

 private:
  std::uint64_t state_;
};

/// Fisher-Yates shuffle driven by SplitMix64::below, swapping from the back.
template <typename T>
void shuffle(std::span<T> items, SplitMix64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng.below(i));
    std::swap(items[i - 1], items[j]);
  }
}

/// Round half to even; used for every count derived from a fraction.
std::int64_t round_half_even(double x) noexcept;

}  // namespace lapeig
