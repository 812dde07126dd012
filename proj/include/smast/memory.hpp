#pragma once

#include <vector>

#include "smast/rng.hpp"
#include "smast/tape.hpp"
#include "smast/tensor.hpp"

namespace smast {

/// Gated recurrence weights shared across semantics; one cell per flow
/// component. No bias terms.
struct MemoryCell {
  Param wz, wr, wh;  // [in_dim x d_g]
  Param uz, ur, uh;  // [d_g x d_g]
  int64_t in_dim = 0, d_g = 0;

  MemoryCell() = default;
  MemoryCell(int64_t in, int64_t dg, Rng& rng, const std::string& prefix);
  std::vector<Param*> params();
};

/// Rolling per-component state. `hx_hist[t]` / `hy_hist[t]` is the state
/// after ingesting frame t; the dilated recurrence reads lagged entries.
struct MemoryState {
  std::vector<Tensor> hx_hist, hy_hist;  // each [n_sem x d_g]
  std::vector<int64_t> last_update_times;
  int64_t steps = 0;

  const Tensor& hx() const { return hx_hist.back(); }
  const Tensor& hy() const { return hy_hist.back(); }
};

// Gap back to the most recent frame (< t) whose mean motion magnitude
// exceeded the threshold; 1 when no such frame exists.
int64_t select_dilated_step(const std::vector<double>& mean_motion, int64_t t, double threshold);

// One gated update for one component with a per-semantic lagged state.
// h_lag rows are gathered by the caller.
Tensor cell_forward(const MemoryCell& cell, const Tensor& x_t, const Tensor& h_lag);
Var cell_forward(Tape& t, MemoryCell& cell, Var x_t, Var h_lag);

// Both components advanced one frame; omega holds the per-semantic dilation.
MemoryState step(const MemoryCell& cell_x, const MemoryCell& cell_y, MemoryState state,
                 const Tensor& xt_x, const Tensor& xt_y, const std::vector<int64_t>& omega);

// Gathers the lagged state rows h_{t - omega_s} for each semantic; frames
// before 0 read as zero.
Tensor gather_lagged(const std::vector<Tensor>& hist, const std::vector<int64_t>& omega,
                     int64_t t, int64_t n_sem, int64_t d_g);
Var gather_lagged(Tape& t, const std::vector<Var>& hist, const std::vector<int64_t>& omega,
                  int64_t frame, int64_t n_sem, int64_t d_g);

// Mean over the state axis scaled by the learnable gain: [n x d_g] -> [n].
Tensor pool_offsets(const Tensor& h, const Param& gain);
Var pool_offsets(Tape& t, Var h, Param& gain);

// Person-row features: persons_rows(h) * w, [n_persons x d_f].
Tensor memory_features(const Tensor& h, int64_t n_persons, const Tensor& w);
Var memory_features(Tape& t, Var h, int64_t n_persons, Param& w);

/// The whole module: two cells, the feature maps and the offset gain.
struct MotionMemory {
  MemoryCell cell_x, cell_y;
  Param wx, wy;       // [d_g x d_f]
  Param offset_gain;  // scalar
  MotionMemory() = default;
  MotionMemory(int64_t in_dim, int64_t d_g, int64_t d_f, double gain_init, Rng& rng);
  std::vector<Param*> params();
};

}  // namespace smast
