#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace riskpipe {

// Counter-based random numbers: every draw is a pure function of (seed,
// counter), so generation order never affects the stream and parallel
// producers stay reproducible.

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Uniform in (0, 1]; never returns 0 so it is safe under log().
inline double uniform_open01(std::uint64_t seed, std::uint64_t counter) {
  std::uint64_t z = splitmix64(splitmix64(seed) ^ splitmix64(counter));
  return static_cast<double>((z >> 11) + 1) * 0x1.0p-53;
}

// Standard normal via Box-Muller; one draw per (seed, counter) pair.
inline double gaussian(std::uint64_t seed, std::uint64_t counter) {
  double u1 = uniform_open01(seed, 2 * counter);
  double u2 = uniform_open01(seed, 2 * counter + 1);
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

// Sequential convenience wrapper over the counter stream.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed) {}

  double uniform() { return uniform_open01(seed_, counter_++); }

  // Uniform in [lo, hi).
  double uniform(double lo, double hi) {
    double u = uniform();
    return lo + (hi - lo) * (u == 1.0 ? 0.0 : u);
  }

  double normal() { return gaussian(seed_, counter_++); }

  // Uniform integer in [0, n); n must be > 0.
  std::uint64_t next_index(std::uint64_t n) {
    std::uint64_t z = splitmix64(splitmix64(seed_) ^ splitmix64(counter_++));
    return z % n;
  }

  // Derive an independent seed, e.g. one per episode in a corpus.
  std::uint64_t fork(std::uint64_t stream) const {
    return splitmix64(splitmix64(seed_) ^ splitmix64(stream + 1));
  }

 private:
  std::uint64_t seed_;
  std::uint64_t counter_ = 0;
};

}  // namespace riskpipe
