#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace dmst {

using Rng = std::mt19937_64;

// splitmix64 finalizer.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives an independent seed stream from the run seed, keyed by a module
// tag and up to two integer coordinates (sensor, frame, particle...).
// Sub-streams stay reproducible no matter how work is scheduled.
inline std::uint64_t derive_seed(std::uint64_t base, std::string_view tag,
                                 std::uint64_t a = 0, std::uint64_t b = 0) {
  std::uint64_t h = splitmix64(base);
  for (char ch : tag) h = splitmix64(h ^ static_cast<unsigned char>(ch));
  h = splitmix64(h ^ a);
  h = splitmix64(h ^ b);
  return h;
}

}  // namespace dmst
