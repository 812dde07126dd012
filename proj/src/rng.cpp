#include "smast/rng.hpp"

#include <cmath>

namespace smast {

uint64_t mix_seed(uint64_t a, uint64_t b) {
  uint64_t z = a + 0x9e3779b97f4a7c15ull * (b + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

void init_uniform(Param& p, int64_t fan_in, Rng& rng) {
  const float bound = 1.0f / std::sqrt(static_cast<float>(fan_in > 0 ? fan_in : 1));
  for (float& v : p.value.data()) v = rng.uniformf(-bound, bound);
  p.zero_grad();
}

Tensor random_tensor(Shape shape, Rng& rng, float lo, float hi) {
  Tensor t(std::move(shape));
  for (float& v : t.data()) v = rng.uniformf(lo, hi);
  return t;
}

}  // namespace smast
