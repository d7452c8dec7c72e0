#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <span>
#include <string_view>

#include "gardner/check.hpp"

namespace gardner {

// splitmix64 step, used for deriving independent seeds from a base seed plus
// stream labels (episode index, iteration, color, ...). Keeping derivation
// explicit makes every run reproducible from the single configured seed.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t s = seed ^ (0x9e3779b97f4a7c15ULL + stream * 0xa24baed4963ee407ULL);
  splitmix64(s);
  return splitmix64(s);
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::string_view label, std::uint64_t stream = 0) {
  std::uint64_t h = 1469598103934665603ULL;  // FNV-1a over the label
  for (char c : label) {
    h ^= static_cast<unsigned char>(c);
    h *= 1099511628211ULL;
  }
  return mix_seed(seed ^ h, stream);
}

// mt19937_64 plus hand-rolled draw helpers. The standard distributions are
// implementation-defined, so sampling goes through these to keep the exact
// stream pinned by our own code.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Unbiased integer in [0, n) via rejection sampling.
  std::uint64_t next_below(std::uint64_t n) {
    GARDNER_CHECK(n > 0);
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= limit);
    return x % n;
  }

  int next_index(int n) { return static_cast<int>(next_below(static_cast<std::uint64_t>(n))); }

  // Uniform in [0, 1) with 53 bits of precision.
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Standard normal via Box-Muller; one draw cached.
  double next_normal() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u, v, s;
    do {
      u = 2.0 * next_double() - 1.0;
      v = 2.0 * next_double() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double m = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * m;
    have_spare_ = true;
    return u * m;
  }

  // Samples an index from unnormalized non-negative weights.
  int next_categorical(std::span<const double> weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    GARDNER_CHECK(total > 0.0);
    double x = next_double() * total;
    for (std::size_t i = 0; i + 1 < weights.size(); ++i) {
      x -= weights[i];
      if (x < 0.0) return static_cast<int>(i);
    }
    return static_cast<int>(weights.size()) - 1;
  }

  template <typename T>
  void shuffle(std::span<T> items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::size_t j = next_below(i);
      std::swap(items[i - 1], items[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace gardner
