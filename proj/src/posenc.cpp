#include "smast/posenc.hpp"

#include <cmath>

namespace smast {

Tensor encode_1d(double p, int64_t d, double psi) {
  if (d % 2 != 0) fail("encode_1d: channel count must be even");
  Tensor out({d});
  for (int64_t n = 0; n < d / 2; ++n) {
    double freq = std::pow(psi, -2.0 * static_cast<double>(n) / static_cast<double>(d));
    out.at(2 * n) = static_cast<float>(std::sin(p * freq));
    out.at(2 * n + 1) = static_cast<float>(std::cos(p * freq));
  }
  return out;
}

Tensor encode_2d_motion_aware(const SemanticPosition& pos, const PeConfig& cfg) {
  if (cfg.d_f % 2 != 0) fail("encode_2d: d_f must be even");
  const int64_t half = cfg.d_f / 2;
  Tensor x = encode_1d(pos.px + pos.dpx, half, cfg.psi);
  Tensor y = encode_1d(pos.py + pos.dpy, half, cfg.psi);
  Tensor out({cfg.d_f});
  for (int64_t i = 0; i < half; ++i) {
    out.at(i) = x.at(i);
    out.at(half + i) = y.at(i);
  }
  return out;
}

Tensor add_positional(const Tensor& x, const Tensor& pa) {
  if (!x.same_shape(pa))
    fail("add_positional shape mismatch: " + shape_str(x.shape()) + " vs " +
         shape_str(pa.shape()));
  Tensor out = x;
  for (int64_t i = 0; i < out.numel(); ++i) out.at(i) += pa.at(i);
  return out;
}

Var encode_2d_motion_aware(Tape& t, Var dpx, Var dpy,
                           const std::vector<SemanticPosition>& initial, const PeConfig& cfg) {
  const int64_t n = static_cast<int64_t>(initial.size());
  if (t.val(dpx).numel() != n || t.val(dpy).numel() != n)
    fail("encode_2d: offset count does not match semantic count");
  Tensor px({n}), py({n});
  for (int64_t i = 0; i < n; ++i) {
    px.at(i) = static_cast<float>(initial[static_cast<size_t>(i)].px);
    py.at(i) = static_cast<float>(initial[static_cast<size_t>(i)].py);
  }
  Var posx = t.add(t.constant(std::move(px)), dpx);
  Var posy = t.add(t.constant(std::move(py)), dpy);
  Var ex = t.sin_cos_encode(posx, cfg.d_f / 2, cfg.psi);
  Var ey = t.sin_cos_encode(posy, cfg.d_f / 2, cfg.psi);
  return t.concat_cols({ex, ey});
}

Tensor encode_1d_patch_labels(const std::vector<SemanticPosition>& initial, const PeConfig& cfg) {
  const int64_t n = static_cast<int64_t>(initial.size());
  Tensor out({n, cfg.d_f});
  for (int64_t i = 0; i < n; ++i) {
    const auto& p = initial[static_cast<size_t>(i)];
    double label = std::floor(p.py) * static_cast<double>(cfg.patch_cols) + std::floor(p.px);
    Tensor row = encode_1d(label, cfg.d_f, cfg.psi);
    for (int64_t j = 0; j < cfg.d_f; ++j) out.at2(i, j) = row.at(j);
  }
  return out;
}

}  // namespace smast
