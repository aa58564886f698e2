#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace guiaif {

using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Derives an independent stream seed from a master seed and a tag path, so
/// that e.g. (seed, "train", task 2) always maps to the same generator no matter
/// what else the run does.
inline std::uint64_t derive_seed(std::uint64_t master, std::initializer_list<std::uint64_t> tags) {
  std::uint64_t s = splitmix64(master);
  for (std::uint64_t t : tags) s = splitmix64(s ^ splitmix64(t + 0x632BE59BD9B4E019ULL));
  return s;
}

inline Rng make_rng(std::uint64_t master, std::initializer_list<std::uint64_t> tags) {
  return Rng(derive_seed(master, tags));
}

// Stream tags.
inline constexpr std::uint64_t kStreamTrain = 1;
inline constexpr std::uint64_t kStreamActions = 2;
inline constexpr std::uint64_t kStreamEval = 3;

}  // namespace guiaif
