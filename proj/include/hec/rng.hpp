#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <vector>

#include <Eigen/Core>

namespace hec {

// Deterministic random number generator (xoshiro256** with splitmix64 seeding).
//
// The standard <random> distributions are implementation-defined, so sequences
// would differ between standard libraries.  Everything seeded in this project
// flows through this class instead, which makes runs bit-reproducible across
// platforms, runs, and thread counts.  Substreams derived with stream() are
// independent for practical purposes; concurrent workers must each own one.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : seed_(seed) {
    std::uint64_t x = seed;
    for (auto& word : s_) word = splitmix64(x);
    // A few warm-up steps decorrelate near-identical seeds.
    for (int i = 0; i < 4; ++i) next_u64();
  }

  // Child generator addressed by (seed, k0, k1, k2), e.g. one stream per
  // scenario index.  Derivation only reads the stored seed, not generator
  // state, so sibling streams may be created in any order.
  Rng stream(std::uint64_t k0, std::uint64_t k1 = 0, std::uint64_t k2 = 0) const {
    std::uint64_t x = seed_;
    x = mix(x, k0 + 1);
    x = mix(x, k1 + 1);
    x = mix(x, k2 + 1);
    return Rng(x);
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

  // Uniform integer in [0, n).
  std::uint64_t uniform_index(std::uint64_t n) {
    const std::uint64_t limit = n * (UINT64_MAX / n);  // rejection removes modulo bias
    std::uint64_t v;
    do {
      v = next_u64();
    } while (v >= limit);
    return v % n;
  }

  // Standard normal via Box-Muller (cosine branch only, no cached state).
  double normal() {
    double u1;
    do {
      u1 = uniform01();
    } while (u1 <= 0.0);
    const double u2 = uniform01();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double normal(double mean, double sigma) { return mean + sigma * normal(); }

  // Uniform direction on the unit sphere.
  Eigen::Vector3d unit_vector3() {
    const double z = uniform(-1.0, 1.0);
    const double phi = uniform(0.0, 2.0 * std::numbers::pi);
    const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
    return {r * std::cos(phi), r * std::sin(phi), z};
  }

  // Uniform direction in the plane.
  Eigen::Vector2d unit_vector2() {
    const double phi = uniform(0.0, 2.0 * std::numbers::pi);
    return {std::cos(phi), std::sin(phi)};
  }

  // k distinct indices drawn from [0, n) in draw order (partial Fisher-Yates).
  std::vector<int> sample_without_replacement(int n, int k) {
    std::vector<int> pool(n);
    for (int i = 0; i < n; ++i) pool[i] = i;
    std::vector<int> out;
    out.reserve(k);
    for (int i = 0; i < k; ++i) {
      const auto j = i + static_cast<int>(uniform_index(static_cast<std::uint64_t>(n - i)));
      std::swap(pool[i], pool[j]);
      out.push_back(pool[i]);
    }
    return out;
  }

  std::uint64_t seed() const { return seed_; }

private:
  static std::uint64_t splitmix64(std::uint64_t& x) {
    std::uint64_t z = (x += 0x9e3779b97f4a7c15ull);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  static std::uint64_t mix(std::uint64_t h, std::uint64_t k) {
    h ^= k * 0xff51afd7ed558ccdull;
    h = (h ^ (h >> 33)) * 0xc4ceb9fe1a85ec53ull;
    return h ^ (h >> 33);
  }

  static std::uint64_t rotl(std::uint64_t v, int k) { return (v << k) | (v >> (64 - k)); }

  std::uint64_t s_[4] = {};
  std::uint64_t seed_ = 0;
};

}  // namespace hec
