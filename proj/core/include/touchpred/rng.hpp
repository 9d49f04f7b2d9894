#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <string_view>

// Deterministic random primitives. std::mt19937_64 output is fully specified
// by the standard; the distribution helpers here avoid the std <random>
// distributions, whose output is implementation-defined, so streams are
// reproducible across compilers and platforms.
namespace touchpred::rng {

inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9e3779b97f4a7c15ULL;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Order-sensitive combine of a seed and a stream id into a fresh seed.
inline std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t s = seed;
  std::uint64_t a = splitmix64(s);
  s = a ^ (stream + 0x9e3779b97f4a7c15ULL + (a << 6) + (a >> 2));
  return splitmix64(s);
}

// FNV-1a over bytes; used to derive per-user streams from string ids.
inline std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Engine {
 public:
  explicit Engine(std::uint64_t seed) : gen_(seed) {}

  // Independent stream derived from (seed, stream id).
  static Engine streamed(std::uint64_t seed, std::uint64_t stream) {
    return Engine(mix(seed, stream));
  }

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Unbiased uniform integer on [0, n); n must be positive.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t reject = (0 - n) % n;  // 2^64 mod n
    for (;;) {
      const std::uint64_t r = next_u64();
      if (r >= reject) return r % n;
    }
  }

  // Standard normal via Box-Muller; consumes exactly two uniforms.
  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log1p(-u1));
    return r * std::cos(2.0 * 3.14159265358979323846 * u2);
  }

  // Exact Poisson sampling by summing Exp(1) arrival gaps; O(lambda) uniforms.
  std::int64_t poisson(double lambda) {
    if (!(lambda > 0.0)) return 0;
    std::int64_t k = 0;
    double sum = 0.0;
    for (;;) {
      sum += -std::log1p(-uniform());
      if (sum > lambda) return k;
      ++k;
    }
  }

  // Fisher-Yates shuffle, uses below() so the permutation is platform-stable.
  template <typename RandomIt>
  void shuffle(RandomIt first, RandomIt last) {
    const auto n = static_cast<std::uint64_t>(last - first);
    for (std::uint64_t i = n; i > 1; --i) {
      const std::uint64_t j = below(i);
      std::swap(first[i - 1], first[j]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace touchpred::rng
