#pragma once

#include <cstddef>
#include <cstdint>
#include <random>

#include "cogflow/field.hpp"

namespace cogflow {

/// SplitMix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Counter-based draw: a pure function of (seed, a, b).
constexpr std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t a, std::uint64_t b) noexcept {
  return mix64(mix64(mix64(seed) ^ a) ^ b);
}

/// Maps a 64-bit draw onto {0, ..., n-1} by multiply-shift.
constexpr std::size_t uniform_index(std::uint64_t draw, std::size_t n) noexcept {
  return static_cast<std::size_t>((static_cast<unsigned __int128>(draw) * n) >> 64);
}

// Domain separators for the independent streams derived from one seed.
inline constexpr std::uint64_t kInitialStateStream = 0x78302d6e6f697365ULL;
inline constexpr std::uint64_t kBlendStream = 0x626c656e642d7273ULL;

/// Per-sample seed for stream `domain`; depends only on (seed, sample).
constexpr std::uint64_t sample_seed(std::uint64_t seed, std::uint64_t sample, std::uint64_t domain) noexcept {
  return counter_hash(seed, sample, domain);
}

/// Standard-normal x0 for one sample.
inline Vector draw_initial_state(std::uint64_t seed, std::uint64_t sample, std::size_t dim) {
  std::mt19937_64 engine(sample_seed(seed, sample, kInitialStateStream));
  std::normal_distribution<double> normal;
  Vector x(static_cast<Eigen::Index>(dim));
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = normal(engine);
  return x;
}

}  // namespace cogflow
