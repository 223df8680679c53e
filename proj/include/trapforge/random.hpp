#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace trapforge {

// All sampling and shuffling in the toolkit goes through these helpers so
// results are pinned to the seed, independent of the standard library's
// distribution implementations.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Stable per-run seed derivation: mixes a base seed with stream indices.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0) {
  return splitmix64(splitmix64(base ^ 0x5851f42d4c957f2dULL) ^ splitmix64(a) ^ (b + 1));
}

// Unbiased draw from [0, n) via rejection sampling.
inline std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t n) {
  if (n == 0) return 0;
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
  std::uint64_t v = rng();
  while (v >= limit) v = rng();
  return v % n;
}

template <typename T>
void seeded_shuffle(std::vector<T>& items, std::mt19937_64& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    std::size_t j = static_cast<std::size_t>(uniform_below(rng, i));
    std::swap(items[i - 1], items[j]);
  }
}

// Order-preserving uniform sample without replacement (selection sampling):
// returns k indices from [0, n) in increasing order.
inline std::vector<std::size_t> sample_indices(std::mt19937_64& rng, std::size_t n, std::size_t k) {
  std::vector<std::size_t> picked;
  picked.reserve(k);
  std::size_t needed = k;
  for (std::size_t i = 0; i < n && needed > 0; ++i) {
    std::size_t remaining = n - i;
    if (uniform_below(rng, remaining) < needed) {
      picked.push_back(i);
      --needed;
    }
  }
  return picked;
}

}  // namespace trapforge
