#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "bicforge/errors.hpp"

namespace bicforge {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Seeded random stream. Parallel call sites derive independent sub-streams
// with derive(); results are then a function of (master seed, stream ids)
// regardless of worker count.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : seed_(seed), engine_(splitmix64(seed)) {}

  RngStream derive(std::uint64_t a) const {
    return RngStream(splitmix64(seed_ ^ splitmix64(a + 0x51eD2701ULL)));
  }
  RngStream derive(std::uint64_t a, std::uint64_t b) const { return derive(a).derive(b); }
  RngStream derive(std::uint64_t a, std::uint64_t b, std::uint64_t c) const {
    return derive(a).derive(b).derive(c);
  }
  RngStream derive(std::uint64_t a, std::uint64_t b, std::uint64_t c, std::uint64_t d) const {
    return derive(a).derive(b).derive(c).derive(d);
  }

  std::uint64_t seed() const { return seed_; }

  std::uint64_t next_u64() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  std::size_t uniform_below(std::size_t n) {
    if (n == 0) throw InvalidArgument("uniform_below(0)");
    // Rejection sampling keeps the draw unbiased and platform-stable.
    std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v;
    do {
      v = engine_();
    } while (v >= limit);
    return static_cast<std::size_t>(v % n);
  }

  // Draws an index with the given weights; weights need not be normalized.
  std::size_t categorical(const std::vector<double>& weights) {
    double total = 0.0;
    for (double w : weights) total += w;
    if (total <= 0.0) throw InvalidArgument("categorical: no positive mass");
    double u = uniform() * total;
    double acc = 0.0;
    std::size_t last_positive = weights.size();
    for (std::size_t k = 0; k < weights.size(); ++k) {
      if (weights[k] <= 0.0) continue;
      last_positive = k;
      acc += weights[k];
      if (u < acc) return k;
    }
    return last_positive;  // rounding fell off the end
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace bicforge
