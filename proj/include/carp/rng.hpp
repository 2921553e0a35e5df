#pragma once

#include <cstdint>
#include <random>

namespace carp {

// Engine for every stochastic routine. mt19937_64 output is fixed by the
// standard, so streams are reproducible across platforms as long as draws go
// through uniform01() rather than std::uniform_real_distribution.
using Rng = std::mt19937_64;

constexpr std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Seed of sub-stream `index` under `master`. Stable across releases.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return splitmix64(splitmix64(master) ^ splitmix64(index + 0x632BE59BD9B4E019ull));
}

inline Rng make_stream(std::uint64_t master, std::uint64_t index) {
  return Rng(derive_seed(master, index));
}

// Uniform on [0, 1) with 53 random bits.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

inline bool bernoulli(Rng& rng, double p) { return uniform01(rng) < p; }

}  // namespace carp
