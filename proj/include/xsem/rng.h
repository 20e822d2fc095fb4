#pragma once

#include <cstdint>

namespace xsem {

// SplitMix64 finalizer; a cheap bijective scrambler for 64-bit seeds.
inline std::uint64_t SplitMix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Derives an independent seed for item `index` of a run seeded with `seed`,
// so per-item generators do not depend on processing order.
inline std::uint64_t MixSeed(std::uint64_t seed, std::uint64_t index) {
  return SplitMix64(SplitMix64(seed) ^ (index * 0xD1B54A32D192ED03ULL));
}

}  // namespace xsem
