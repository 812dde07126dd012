#pragma once

#include <vector>

#include "smast/tape.hpp"
#include "smast/tensor.hpp"

namespace smast {

struct PeConfig {
  int64_t d_f = 64;
  double psi = 1e4;
  int64_t patch_rows = 8;
  int64_t patch_cols = 8;
};

/// Patch-grid coordinates of one semantic plus its motion memory offsets,
/// all in patch units.
struct SemanticPosition {
  double px = 0, py = 0;    // initial patch coordinates
  double dpx = 0, dpy = 0;  // offsets accumulated by the motion memory
};

// Interleaved sin/cos channels of a single position; channel pair n uses
// wavelength psi^(2n/d).
Tensor encode_1d(double p, int64_t d, double psi = 1e4);

// Two half-width 1-D encodings over (px+dpx) and (py+dpy), concatenated to
// d_f channels. With zero offsets this is the static 2-D patch encoding.
Tensor encode_2d_motion_aware(const SemanticPosition& pos, const PeConfig& cfg);

// x + P_A rows; shapes must match.
Tensor add_positional(const Tensor& x, const Tensor& pa);

// Tape path: offsets are Vars so gradients reach the motion memory.
// `dpx`, `dpy` hold one offset per semantic; initial positions are constants.
Var encode_2d_motion_aware(Tape& t, Var dpx, Var dpy,
                           const std::vector<SemanticPosition>& initial, const PeConfig& cfg);

// Static 1-D patch-label encoding (ViT-style raster order), one row per
// semantic; the ablation baseline.
Tensor encode_1d_patch_labels(const std::vector<SemanticPosition>& initial, const PeConfig& cfg);

}  // namespace smast
