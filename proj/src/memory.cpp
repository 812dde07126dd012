#include "smast/memory.hpp"

#include <cmath>

namespace smast {

MemoryCell::MemoryCell(int64_t in, int64_t dg, Rng& rng, const std::string& prefix)
    : wz(Tensor({in, dg}), prefix + ".wz"),
      wr(Tensor({in, dg}), prefix + ".wr"),
      wh(Tensor({in, dg}), prefix + ".wh"),
      uz(Tensor({dg, dg}), prefix + ".uz"),
      ur(Tensor({dg, dg}), prefix + ".ur"),
      uh(Tensor({dg, dg}), prefix + ".uh"),
      in_dim(in),
      d_g(dg) {
  init_uniform(wz, in, rng);
  init_uniform(wr, in, rng);
  init_uniform(wh, in, rng);
  init_uniform(uz, dg, rng);
  init_uniform(ur, dg, rng);
  init_uniform(uh, dg, rng);
}

std::vector<Param*> MemoryCell::params() { return {&wz, &wr, &wh, &uz, &ur, &uh}; }

int64_t select_dilated_step(const std::vector<double>& mean_motion, int64_t t, double threshold) {
  if (t < 1) fail("select_dilated_step: t must be at least 1");
  for (int64_t s = t - 1; s >= 0; --s)
    if (mean_motion[static_cast<size_t>(s)] > threshold) return t - s;
  return 1;
}

Var cell_forward(Tape& t, MemoryCell& cell, Var x_t, Var h_lag) {
  if (t.val(x_t).cols() != cell.in_dim || t.val(h_lag).cols() != cell.d_g)
    fail("cell_forward shape mismatch: x " + shape_str(t.val(x_t).shape()) + ", h " +
         shape_str(t.val(h_lag).shape()));
  Var z = t.sigmoid(t.add(t.matmul(x_t, t.param(cell.wz)), t.matmul(h_lag, t.param(cell.uz))));
  Var r = t.sigmoid(t.add(t.matmul(x_t, t.param(cell.wr)), t.matmul(h_lag, t.param(cell.ur))));
  Var n = t.tanh_(
      t.add(t.matmul(x_t, t.param(cell.wh)), t.mul(r, t.matmul(h_lag, t.param(cell.uh)))));
  // h = z*h_lag + (1-z)*n
  Var one_minus_z = t.add_const(t.scale(z, -1.0), 1.0);
  return t.add(t.mul(z, h_lag), t.mul(one_minus_z, n));
}

Tensor cell_forward(const MemoryCell& cell, const Tensor& x_t, const Tensor& h_lag) {
  Tape t;
  MemoryCell& c = const_cast<MemoryCell&>(cell);
  Var out = cell_forward(t, c, t.constant(x_t), t.constant(h_lag));
  return t.val(out);
}

Tensor gather_lagged(const std::vector<Tensor>& hist, const std::vector<int64_t>& omega,
                     int64_t t, int64_t n_sem, int64_t d_g) {
  Tensor out({n_sem, d_g});
  for (int64_t s = 0; s < n_sem; ++s) {
    int64_t src = t - omega[static_cast<size_t>(s)];
    if (src < 0) continue;  // zero state before the first frame
    const Tensor& h = hist[static_cast<size_t>(src)];
    for (int64_t j = 0; j < d_g; ++j) out.at2(s, j) = h.at2(s, j);
  }
  return out;
}

Var gather_lagged(Tape& t, const std::vector<Var>& hist, const std::vector<int64_t>& omega,
                  int64_t frame, int64_t n_sem, int64_t d_g) {
  std::vector<Var> rows;
  rows.reserve(static_cast<size_t>(n_sem));
  for (int64_t s = 0; s < n_sem; ++s) {
    int64_t src = frame - omega[static_cast<size_t>(s)];
    if (src < 0)
      rows.push_back(t.constant(Tensor({1, d_g})));
    else
      rows.push_back(t.slice_rows(hist[static_cast<size_t>(src)], s, s + 1));
  }
  return t.concat_rows(rows);
}

MemoryState step(const MemoryCell& cell_x, const MemoryCell& cell_y, MemoryState state,
                 const Tensor& xt_x, const Tensor& xt_y, const std::vector<int64_t>& omega) {
  const int64_t n_sem = xt_x.rows();
  const int64_t t = state.steps;
  Tensor lag_x = gather_lagged(state.hx_hist, omega, t, n_sem, cell_x.d_g);
  Tensor lag_y = gather_lagged(state.hy_hist, omega, t, n_sem, cell_y.d_g);
  state.hx_hist.push_back(cell_forward(cell_x, xt_x, lag_x));
  state.hy_hist.push_back(cell_forward(cell_y, xt_y, lag_y));
  state.steps = t + 1;
  return state;
}

Tensor pool_offsets(const Tensor& h, const Param& gain) {
  const int64_t n = h.rows(), d = h.cols();
  Tensor out({n});
  for (int64_t i = 0; i < n; ++i) {
    double s = 0;
    for (int64_t j = 0; j < d; ++j) s += h.at2(i, j);
    out.at(i) = static_cast<float>(s / static_cast<double>(d) * gain.value.at(0));
  }
  return out;
}

Var pool_offsets(Tape& t, Var h, Param& gain) {
  Var mean = t.mean_cols(h);
  return t.reshape(t.scale_by(mean, t.param(gain)), {t.val(h).rows()});
}

Tensor memory_features(const Tensor& h, int64_t n_persons, const Tensor& w) {
  Tensor rows({n_persons, h.cols()});
  for (int64_t i = 0; i < n_persons; ++i)
    for (int64_t j = 0; j < h.cols(); ++j) rows.at2(i, j) = h.at2(i, j);
  return matmul(rows, w);
}

Var memory_features(Tape& t, Var h, int64_t n_persons, Param& w) {
  return t.matmul(t.slice_rows(h, 0, n_persons), t.param(w));
}

MotionMemory::MotionMemory(int64_t in_dim, int64_t d_g, int64_t d_f, double gain_init, Rng& rng)
    : cell_x(in_dim, d_g, rng, "memory.x"),
      cell_y(in_dim, d_g, rng, "memory.y"),
      wx(Tensor({d_g, d_f}), "memory.wx"),
      wy(Tensor({d_g, d_f}), "memory.wy"),
      offset_gain(Tensor::scalar(static_cast<float>(gain_init)), "memory.offset_gain") {
  init_uniform(wx, d_g, rng);
  init_uniform(wy, d_g, rng);
}

std::vector<Param*> MotionMemory::params() {
  std::vector<Param*> out;
  for (Param* p : cell_x.params()) out.push_back(p);
  for (Param* p : cell_y.params()) out.push_back(p);
  out.push_back(&wx);
  out.push_back(&wy);
  out.push_back(&offset_gain);
  return out;
}

}  // namespace smast
