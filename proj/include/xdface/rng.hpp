// Copyright 2026 The xdface Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace xdface {

// Counter-based seeding: every random stream is keyed on (seed, counters),
// never on the order in which work items are scheduled.

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

constexpr std::uint64_t mix_key(std::uint64_t seed, std::uint64_t a) noexcept {
  return splitmix64(seed ^ splitmix64(a + 0x632BE59BD9B4E019ULL));
}

constexpr std::uint64_t mix_key(std::uint64_t seed, std::uint64_t a, std::uint64_t b) noexcept {
  return mix_key(mix_key(seed, a), b);
}

/// FNV-1a, stable across platforms (std::hash is not).
constexpr std::uint64_t fnv1a(std::string_view s,
                              std::uint64_t h = 0xCBF29CE484222325ULL) noexcept {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

using Rng = std::mt19937_64;

inline Rng make_rng(std::uint64_t seed, std::uint64_t a) { return Rng(mix_key(seed, a)); }
inline Rng make_rng(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
  return Rng(mix_key(seed, a, b));
}

/// Uniform integer in [0, n). Rejection sampling keeps it unbiased and
/// independent of the standard library's distribution implementation.
inline std::uint64_t uniform_index(Rng& rng, std::uint64_t n) {
  const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return v % n;
}

/// Uniform real in [0, 1) from the top 53 bits.
inline double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

}  // namespace xdface
