#include "smast/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace smast {

double check_gradients(const std::function<double(bool with_grad)>& f,
                       const std::vector<Param*>& params, double h, uint64_t sample_seed) {
  if (h < 1e-5 || h > 1e-2) fail("check_gradients: step must lie in [1e-5, 1e-2]");
  zero_grads(params);
  f(true);
  // snapshot analytic gradients before the probing evaluations
  std::vector<std::vector<float>> analytic;
  analytic.reserve(params.size());
  for (Param* p : params) analytic.push_back(p->grad.data());

  Rng rng(sample_seed);
  double max_rel = 0.0;
  for (size_t pi = 0; pi < params.size(); ++pi) {
    Param* p = params[pi];
    const int64_t n = p->value.numel();
    std::vector<int64_t> coords;
    if (n <= 32) {
      coords.resize(static_cast<size_t>(n));
      for (int64_t i = 0; i < n; ++i) coords[static_cast<size_t>(i)] = i;
    } else {
      for (int i = 0; i < 32; ++i) coords.push_back(rng.uniform_int(0, n - 1));
    }
    for (int64_t c : coords) {
      const float orig = p->value.at(c);
      const float xp = static_cast<float>(orig + h);
      const float xm = static_cast<float>(orig - h);
      p->value.at(c) = xp;
      const double fp = f(false);
      p->value.at(c) = xm;
      const double fm = f(false);
      p->value.at(c) = orig;
      // divide by the step actually realized in f32 storage
      const double numeric = (fp - fm) / (static_cast<double>(xp) - static_cast<double>(xm));
      const double a = analytic[pi][static_cast<size_t>(c)];
      const double rel = std::fabs(a - numeric) / std::max(1e-8, std::fabs(a) + std::fabs(numeric));
      max_rel = std::max(max_rel, rel);
    }
  }
  return max_rel;
}

}  // namespace smast
