#pragma once

#include <cstdint>
#include <random>
#include <utility>
#include <vector>

namespace comprl {

// Deterministic RNG. std::mt19937_64 output is pinned by the standard; the
// helpers below avoid std distributions, whose streams differ across
// standard-library implementations.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform in [0, 1) with 53-bit resolution.
  double next_double() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n); n must be positive.
  std::size_t next_index(std::size_t n) { return static_cast<std::size_t>(gen_() % n); }

  double next_uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[next_index(i)]);
    }
  }

 private:
  std::mt19937_64 gen_;
};

}  // namespace comprl
