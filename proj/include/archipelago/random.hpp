#pragma once

#include <cstdint>
#include <limits>
#include <random>
#include <vector>

// Seeded draws built on the raw mt19937_64 stream. std::random distributions
// are implementation-defined, so anything that must reproduce byte-for-byte
// across toolchains derives values from engine words directly.
namespace archipelago::rng {

using Engine = std::mt19937_64;

inline Engine engine(std::uint64_t seed) { return Engine{seed}; }

// Uniform in [0, 1) with 53 random bits.
inline double unit(Engine& g) {
  return static_cast<double>(g() >> 11) * 0x1.0p-53;
}

inline double uniform(Engine& g, double lo, double hi) {
  return lo + (hi - lo) * unit(g);
}

// Uniform in [0, n) without modulo bias.
inline std::uint64_t below(Engine& g, std::uint64_t n) {
  const std::uint64_t max = std::numeric_limits<std::uint64_t>::max();
  const std::uint64_t limit = max - max % n;
  std::uint64_t v = g();
  while (v >= limit) v = g();
  return v % n;
}

// Inclusive bounds.
inline int uniform_int(Engine& g, int lo, int hi) {
  return lo + static_cast<int>(below(g, static_cast<std::uint64_t>(hi - lo) + 1));
}

inline bool coin(Engine& g) { return (g() >> 63) != 0; }

// Uniform magnitude in [lo, hi] with a random sign.
inline double signed_uniform(Engine& g, double lo, double hi) {
  const double m = uniform(g, lo, hi);
  return coin(g) ? m : -m;
}

template <class T>
void shuffle(std::vector<T>& v, Engine& g) {
  for (std::size_t i = v.size(); i > 1; --i) {
    std::swap(v[i - 1], v[static_cast<std::size_t>(below(g, i))]);
  }
}

// splitmix64, used to derive independent substream seeds.
inline std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

}  // namespace archipelago::rng
