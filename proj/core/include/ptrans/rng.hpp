#pragma once

#include <cstdint>
#include <random>

namespace ptrans {

using Rng = std::mt19937_64;

// SplitMix64 output function.  Used only for seed derivation; the working
// generator is mt19937_64.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Derives an independent stream seed from a base seed and integer labels,
// e.g. derive_seed(seed, rep) or derive_seed(seed, rep, n, k).  Distinct
// label tuples give uncorrelated streams, so parallel workers can each own
// a generator without sharing state.
template <class... Ints>
std::uint64_t derive_seed(std::uint64_t seed, Ints... labels) {
  std::uint64_t h = splitmix64(seed ^ 0xd1b54a32d192ed03ull);
  ((h = splitmix64(h ^ static_cast<std::uint64_t>(labels))), ...);
  return h;
}

inline Rng make_rng(std::uint64_t seed) { return Rng(splitmix64(seed)); }

// Uniform in [0, 1) with 53 random bits, identical across platforms.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline double uniform(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

}  // namespace ptrans
