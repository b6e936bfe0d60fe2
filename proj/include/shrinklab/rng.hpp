#pragma once

#include <cstdint>
#include <random>

namespace shrinklab {

using Rng = std::mt19937_64;

// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) noexcept {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Seed for the index-th independent stream under a base seed:
// mix64(base XOR index). Streams for distinct indices are decorrelated
// even though the XOR inputs differ in few bits.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t index) noexcept {
  return mix64(base ^ index);
}

// Two-level derivation for (cell, replicate) grids.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::uint64_t cell,
                                    std::uint64_t replicate) noexcept {
  return derive_seed(derive_seed(base, cell), replicate);
}

inline Rng make_rng(std::uint64_t seed) { return Rng{seed}; }

}  // namespace shrinklab
