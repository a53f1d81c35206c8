#pragma once

#include <cstdint>
#include <random>

namespace promot {

using Rng = std::mt19937_64;

/// SplitMix64 finalizer. Used to derive independent stream seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed for sub-stream `stream` of a run seeded with `seed`.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return mix_seed(mix_seed(seed) ^ mix_seed(stream + 0x632be59bd9b4e019ULL));
}

// Well-known stream ids so different consumers of one seed never overlap.
inline constexpr std::uint64_t kStreamInit = 1;
inline constexpr std::uint64_t kStreamOptimizer = 2;
inline constexpr std::uint64_t kStreamData = 3;

}  // namespace promot
