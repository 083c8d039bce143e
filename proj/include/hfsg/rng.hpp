#pragma once

#include <cstdint>
#include <random>

namespace hfsg {

// Seeded generator that can derive independent child streams, so the value
// drawn for (frame, node) does not depend on evaluation order.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), engine_(mix(seed)) {}

  Rng split(std::uint64_t stream) const { return Rng(mix(seed_ ^ mix(stream + 0x9E3779B97F4A7C15ULL))); }
  Rng split(std::uint64_t a, std::uint64_t b) const { return split(a).split(b); }

  double uniform() { return std::uniform_real_distribution<double>(0.0, 1.0)(engine_); }
  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  double normal(double mean, double sigma) {
    if (sigma <= 0.0) return mean;
    return std::normal_distribution<double>(mean, sigma)(engine_);
  }
  bool bernoulli(double p) { return p > 0.0 && uniform() < p; }

  std::uint64_t seed() const { return seed_; }

  // splitmix64 finalizer
  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

}  // namespace hfsg
