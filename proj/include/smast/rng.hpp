#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "smast/tensor.hpp"

namespace smast {

// splitmix64 finalizer; used to derive independent substream seeds.
uint64_t mix_seed(uint64_t a, uint64_t b);

/// Seeded generator with explicit value mappings so that runs are
/// bit-reproducible for a given seed regardless of the standard library's
/// distribution implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  uint64_t next_u64() { return eng_(); }

  double uniform(double lo, double hi) {
    // 53 random bits -> [0,1)
    double u = static_cast<double>(eng_() >> 11) * 0x1.0p-53;
    return lo + u * (hi - lo);
  }

  float uniformf(float lo, float hi) { return static_cast<float>(uniform(lo, hi)); }

  // inclusive range [lo, hi]
  int64_t uniform_int(int64_t lo, int64_t hi) {
    uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
    return lo + static_cast<int64_t>(eng_() % span);
  }

  bool coin() { return (eng_() & 1u) != 0; }

  double normal() {
    // Box-Muller, one value per call (the pair's second value is discarded
    // to keep consumption independent of call history).
    double u1 = uniform(1e-12, 1.0);
    double u2 = uniform(0.0, 1.0);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      size_t j = static_cast<size_t>(uniform_int(0, static_cast<int64_t>(i) - 1));
      std::swap(v[i - 1], v[j]);
    }
  }

  Rng fork(uint64_t stream) { return Rng(mix_seed(eng_(), stream)); }

 private:
  std::mt19937_64 eng_;
};

// Uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)].
void init_uniform(Param& p, int64_t fan_in, Rng& rng);
Tensor random_tensor(Shape shape, Rng& rng, float lo = -1.0f, float hi = 1.0f);

}  // namespace smast
