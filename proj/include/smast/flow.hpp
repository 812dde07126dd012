#pragma once

#include <string>
#include <vector>

#include "smast/tensor.hpp"

namespace smast {

struct Vec2 {
  float u = 0, v = 0;
};

/// Dense per-pixel displacement field, row-major [y * width + x].
struct FlowField {
  int64_t width = 0, height = 0;
  std::vector<float> u, v;

  FlowField() = default;
  FlowField(int64_t w, int64_t h)
      : width(w), height(h), u(static_cast<size_t>(w * h), 0.0f),
        v(static_cast<size_t>(w * h), 0.0f) {}
  Vec2 at(int64_t x, int64_t y) const {
    size_t i = static_cast<size_t>(y * width + x);
    return {u[i], v[i]};
  }
  void set(int64_t x, int64_t y, Vec2 d) {
    size_t i = static_cast<size_t>(y * width + x);
    u[i] = d.u;
    v[i] = d.v;
  }
};

/// Half-open pixel box [x0,x1) x [y0,y1).
struct Box {
  int64_t x0 = 0, y0 = 0, x1 = 0, y1 = 0;
  int64_t width() const { return x1 - x0; }
  int64_t height() const { return y1 - y0; }
  int64_t area() const { return width() * height(); }
  bool contains(int64_t x, int64_t y) const { return x >= x0 && x < x1 && y >= y0 && y < y1; }
};

struct GmmComponent {
  double weight = 0;
  double mu[2] = {0, 0};
  double cov[2][2] = {{0, 0}, {0, 0}};
};

struct GmmModel {
  std::vector<GmmComponent> comps;
  std::vector<double> loglik_history;  // one entry per EM iteration
  std::vector<std::string> warnings;
  int64_t K() const { return static_cast<int64_t>(comps.size()); }
};

/// Per-semantic motion vectors before and after camera compensation plus the
/// resized crop handed to the feature embedding.
struct SemanticMotion {
  int64_t id = -1;
  std::vector<Vec2> raw;
  std::vector<Vec2> restored;
  Tensor crop;  // [h, w, 2]
};

// All (u,v) at pixels not covered by any person box.
std::vector<Vec2> split_background(const FlowField& field, const std::vector<Box>& person_boxes);

// EM fit with deterministic farthest-point seeding; covariance eigenvalues
// floored at 1e-6. K is reduced (with a warning) when there are fewer samples.
GmmModel fit_gmm(const std::vector<Vec2>& vectors, int64_t k, int64_t max_iters = 200,
                 double tol = 1e-6);

// Log density of the mixture at one vector.
double gmm_log_density(const GmmModel& model, Vec2 x);
// Highest-responsibility component, ties broken by lowest index.
int64_t gmm_assign(const GmmModel& model, Vec2 x);

// Subtracts the assigned component mean from every raw vector.
SemanticMotion restore(const GmmModel& model, SemanticMotion sem);

// Restores every pixel of a field in place (persons provide the background
// mask for fitting); used by the enhance-flow command and dataset generation.
FlowField restore_field(const FlowField& field, const std::vector<Box>& person_boxes, int64_t k,
                        GmmModel* fitted = nullptr);

// Per-box crop of the field, bilinearly resized to crop_h x crop_w.
// Degenerate boxes are skipped with a warning appended.
std::vector<SemanticMotion> segment_and_resize(const FlowField& field,
                                               const std::vector<Box>& boxes, int64_t crop_h,
                                               int64_t crop_w,
                                               std::vector<std::string>* warnings = nullptr);

// Bilinear resample of a [h, w, c] raster to [out_h, out_w, c] (pixel-center
// convention).
Tensor bilinear_resize(const Tensor& src, int64_t out_h, int64_t out_w);

}  // namespace smast
