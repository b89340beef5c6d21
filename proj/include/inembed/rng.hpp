#pragma once

#include <algorithm>
#include <cstdint>
#include <initializer_list>
#include <random>
#include <utility>
#include <vector>

namespace inembed {

/// splitmix64 finalizer; the basis for seed derivation.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives a child seed from a master seed and a list of integer tags
/// (stage id, grid coordinates, run index, ...). Every source of randomness
/// in the library obtains its seed this way, so independent stages and grid
/// cells own disjoint, reproducible streams.
inline std::uint64_t derive_seed(std::uint64_t master,
                                 std::initializer_list<std::uint64_t> tags) {
  std::uint64_t h = mix64(master);
  for (std::uint64_t t : tags) h = mix64(h ^ t);
  return h;
}

/// Encodes a ratio-style double as a seed tag (exact for grid values).
inline std::uint64_t ratio_tag(double r) {
  return static_cast<std::uint64_t>(static_cast<std::int64_t>(r * 1e9 + 0.5));
}

// Seed-derivation tags, one per randomized stage.
enum SeedTag : std::uint64_t {
  kSeedCorrupt = 1,
  kSeedHoldout = 2,
  kSeedComplete = 3,
  kSeedEmbed = 4,
  kSeedClassifier = 5,
  kSeedGridClassification = 6,
  kSeedGridLinkPrediction = 7,
  kSeedSynth = 8,
  kSeedNegatives = 9,
};

/// Deterministic RNG wrapper. mt19937_64 is fully specified by the standard;
/// the draw helpers below avoid std::*_distribution, whose output is
/// implementation-defined, so streams are stable across platforms.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(mix64(seed)) {}

  std::uint64_t next() { return gen_(); }

  /// Uniform double in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + uniform() * (hi - lo); }

  bool bernoulli(double p) { return uniform() < p; }

  /// Uniform integer in [0, bound); unbiased via rejection.
  std::uint64_t uniform_int(std::uint64_t bound) {
    const std::uint64_t threshold = (0 - bound) % bound;
    for (;;) {
      const std::uint64_t r = gen_();
      if (r >= threshold) return r % bound;
    }
  }

  /// In-place Fisher-Yates shuffle.
  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      const std::size_t j = static_cast<std::size_t>(uniform_int(i));
      std::swap(v[i - 1], v[j]);
    }
  }

  /// Samples `count` distinct indices from [0, n) without replacement;
  /// returned ascending.
  std::vector<int> sample_indices(int n, int count);

 private:
  std::mt19937_64 gen_;
};

inline std::vector<int> Rng::sample_indices(int n, int count) {
  std::vector<int> pool(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) pool[static_cast<std::size_t>(i)] = i;
  for (int i = 0; i < count; ++i) {
    const auto j =
        i + static_cast<int>(uniform_int(static_cast<std::uint64_t>(n - i)));
    std::swap(pool[static_cast<std::size_t>(i)], pool[static_cast<std::size_t>(j)]);
  }
  pool.resize(static_cast<std::size_t>(count));
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace inembed
