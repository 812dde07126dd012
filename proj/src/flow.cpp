#include "smast/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace smast {

std::vector<Vec2> split_background(const FlowField& field, const std::vector<Box>& person_boxes) {
  for (const Box& b : person_boxes)
    if (b.x0 < 0 || b.y0 < 0 || b.x1 > field.width || b.y1 > field.height)
      fail("split_background: box outside field bounds");
  std::vector<Vec2> out;
  out.reserve(static_cast<size_t>(field.width * field.height));
  for (int64_t y = 0; y < field.height; ++y)
    for (int64_t x = 0; x < field.width; ++x) {
      bool inside = false;
      for (const Box& b : person_boxes)
        if (b.contains(x, y)) {
          inside = true;
          break;
        }
      if (!inside) out.push_back(field.at(x, y));
    }
  if (out.empty()) fail("split_background: person boxes cover the entire frame");
  return out;
}

namespace {

constexpr double kCovFloor = 1e-6;

// Floors the smaller eigenvalue of a symmetric 2x2 at kCovFloor.
void floor_covariance(GmmComponent& c) {
  double a = c.cov[0][0], b = c.cov[0][1], d = c.cov[1][1];
  double tr = a + d;
  double det = a * d - b * b;
  double disc = std::sqrt(std::max(0.0, tr * tr / 4.0 - det));
  double lmin = tr / 2.0 - disc;
  if (lmin < kCovFloor) {
    double bump = kCovFloor - lmin;
    c.cov[0][0] += bump;
    c.cov[1][1] += bump;
  }
  c.cov[1][0] = c.cov[0][1];
}

double log_gauss2(const GmmComponent& c, Vec2 x) {
  const double dx = x.u - c.mu[0], dy = x.v - c.mu[1];
  const double a = c.cov[0][0], b = c.cov[0][1], d = c.cov[1][1];
  const double det = a * d - b * b;
  const double inv_a = d / det, inv_b = -b / det, inv_d = a / det;
  const double q = dx * (inv_a * dx + inv_b * dy) + dy * (inv_b * dx + inv_d * dy);
  return -0.5 * q - 0.5 * std::log(det) - std::log(2.0 * 3.141592653589793);
}

double log_sum_exp(const std::vector<double>& xs) {
  double mx = -std::numeric_limits<double>::infinity();
  for (double x : xs) mx = std::max(mx, x);
  if (!std::isfinite(mx)) return mx;
  double s = 0;
  for (double x : xs) s += std::exp(x - mx);
  return mx + std::log(s);
}

// Deterministic farthest-point seeding: first center is the sample closest
// to the data mean, each further center maximizes the distance to the
// nearest chosen center (ties by lowest index).
std::vector<Vec2> seed_centers(const std::vector<Vec2>& xs, int64_t k) {
  const size_t n = xs.size();
  double mu = 0, mv = 0;
  for (const Vec2& x : xs) {
    mu += x.u;
    mv += x.v;
  }
  mu /= static_cast<double>(n);
  mv /= static_cast<double>(n);
  size_t first = 0;
  double best = std::numeric_limits<double>::infinity();
  for (size_t i = 0; i < n; ++i) {
    double d = (xs[i].u - mu) * (xs[i].u - mu) + (xs[i].v - mv) * (xs[i].v - mv);
    if (d < best) {
      best = d;
      first = i;
    }
  }
  std::vector<Vec2> centers{xs[first]};
  std::vector<double> dist(n, std::numeric_limits<double>::infinity());
  while (static_cast<int64_t>(centers.size()) < k) {
    const Vec2& last = centers.back();
    size_t far = 0;
    double fd = -1;
    for (size_t i = 0; i < n; ++i) {
      double d = (xs[i].u - last.u) * (xs[i].u - last.u) + (xs[i].v - last.v) * (xs[i].v - last.v);
      dist[i] = std::min(dist[i], d);
      if (dist[i] > fd) {
        fd = dist[i];
        far = i;
      }
    }
    centers.push_back(xs[far]);
  }
  return centers;
}

}  // namespace

GmmModel fit_gmm(const std::vector<Vec2>& vectors, int64_t k, int64_t max_iters, double tol) {
  GmmModel model;
  if (vectors.empty()) fail("fit_gmm: no vectors");
  if (k < 1) fail("fit_gmm: K must be positive");
  const int64_t n = static_cast<int64_t>(vectors.size());
  if (n < k) {
    model.warnings.push_back("fit_gmm: reduced K from " + std::to_string(k) + " to " +
                             std::to_string(n) + " (fewer samples than components)");
    k = n;
  }

  // init: farthest-point means, global covariance, uniform weights
  std::vector<Vec2> centers = seed_centers(vectors, k);
  double mu = 0, mv = 0;
  for (const Vec2& x : vectors) {
    mu += x.u;
    mv += x.v;
  }
  mu /= static_cast<double>(n);
  mv /= static_cast<double>(n);
  GmmComponent global;
  global.mu[0] = mu;
  global.mu[1] = mv;
  for (const Vec2& x : vectors) {
    double du = x.u - mu, dv = x.v - mv;
    global.cov[0][0] += du * du;
    global.cov[0][1] += du * dv;
    global.cov[1][1] += dv * dv;
  }
  global.cov[0][0] /= static_cast<double>(n);
  global.cov[0][1] /= static_cast<double>(n);
  global.cov[1][1] /= static_cast<double>(n);
  floor_covariance(global);

  model.comps.resize(static_cast<size_t>(k));
  for (int64_t j = 0; j < k; ++j) {
    GmmComponent& c = model.comps[static_cast<size_t>(j)];
    c.weight = 1.0 / static_cast<double>(k);
    c.mu[0] = centers[static_cast<size_t>(j)].u;
    c.mu[1] = centers[static_cast<size_t>(j)].v;
    c.cov[0][0] = global.cov[0][0];
    c.cov[0][1] = c.cov[1][0] = global.cov[0][1];
    c.cov[1][1] = global.cov[1][1];
  }

  std::vector<double> resp(static_cast<size_t>(n * k));
  std::vector<double> logs(static_cast<size_t>(k));
  double prev_ll = -std::numeric_limits<double>::infinity();
  for (int64_t iter = 0; iter < max_iters; ++iter) {
    // E-step
    double ll = 0;
    for (int64_t i = 0; i < n; ++i) {
      for (int64_t j = 0; j < k; ++j)
        logs[static_cast<size_t>(j)] =
            std::log(model.comps[static_cast<size_t>(j)].weight) +
            log_gauss2(model.comps[static_cast<size_t>(j)], vectors[static_cast<size_t>(i)]);
      double lse = log_sum_exp(logs);
      ll += lse;
      for (int64_t j = 0; j < k; ++j)
        resp[static_cast<size_t>(i * k + j)] = std::exp(logs[static_cast<size_t>(j)] - lse);
    }
    model.loglik_history.push_back(ll);
    if (iter > 0 && std::fabs(ll - prev_ll) < tol * (std::fabs(prev_ll) + 1.0)) break;
    prev_ll = ll;

    // M-step
    for (int64_t j = 0; j < k; ++j) {
      GmmComponent& c = model.comps[static_cast<size_t>(j)];
      double nk = 0, su = 0, sv = 0;
      for (int64_t i = 0; i < n; ++i) {
        double r = resp[static_cast<size_t>(i * k + j)];
        nk += r;
        su += r * vectors[static_cast<size_t>(i)].u;
        sv += r * vectors[static_cast<size_t>(i)].v;
      }
      if (nk < 1e-12) {
        // dead component: keep its parameters, renormalized below
        c.weight = 1e-12;
        continue;
      }
      c.weight = nk / static_cast<double>(n);
      c.mu[0] = su / nk;
      c.mu[1] = sv / nk;
      double cuu = 0, cuv = 0, cvv = 0;
      for (int64_t i = 0; i < n; ++i) {
        double r = resp[static_cast<size_t>(i * k + j)];
        double du = vectors[static_cast<size_t>(i)].u - c.mu[0];
        double dv = vectors[static_cast<size_t>(i)].v - c.mu[1];
        cuu += r * du * du;
        cuv += r * du * dv;
        cvv += r * dv * dv;
      }
      c.cov[0][0] = cuu / nk;
      c.cov[0][1] = c.cov[1][0] = cuv / nk;
      c.cov[1][1] = cvv / nk;
      floor_covariance(c);
    }
    double wsum = 0;
    for (const auto& c : model.comps) wsum += c.weight;
    for (auto& c : model.comps) c.weight /= wsum;
  }
  return model;
}

double gmm_log_density(const GmmModel& model, Vec2 x) {
  std::vector<double> logs;
  logs.reserve(model.comps.size());
  for (const auto& c : model.comps) logs.push_back(std::log(c.weight) + log_gauss2(c, x));
  return log_sum_exp(logs);
}

int64_t gmm_assign(const GmmModel& model, Vec2 x) {
  int64_t best = 0;
  double best_val = -std::numeric_limits<double>::infinity();
  for (int64_t j = 0; j < model.K(); ++j) {
    double v = std::log(model.comps[static_cast<size_t>(j)].weight) +
               log_gauss2(model.comps[static_cast<size_t>(j)], x);
    if (v > best_val) {
      best_val = v;
      best = j;
    }
  }
  return best;
}

SemanticMotion restore(const GmmModel& model, SemanticMotion sem) {
  sem.restored.clear();
  sem.restored.reserve(sem.raw.size());
  for (const Vec2& x : sem.raw) {
    int64_t j = gmm_assign(model, x);
    const GmmComponent& c = model.comps[static_cast<size_t>(j)];
    sem.restored.push_back(
        {static_cast<float>(x.u - c.mu[0]), static_cast<float>(x.v - c.mu[1])});
  }
  return sem;
}

FlowField restore_field(const FlowField& field, const std::vector<Box>& person_boxes, int64_t k,
                        GmmModel* fitted) {
  std::vector<Vec2> bg = split_background(field, person_boxes);
  GmmModel model = fit_gmm(bg, k);
  FlowField out(field.width, field.height);
  for (int64_t y = 0; y < field.height; ++y)
    for (int64_t x = 0; x < field.width; ++x) {
      Vec2 d = field.at(x, y);
      int64_t j = gmm_assign(model, d);
      const GmmComponent& c = model.comps[static_cast<size_t>(j)];
      out.set(x, y, {static_cast<float>(d.u - c.mu[0]), static_cast<float>(d.v - c.mu[1])});
    }
  if (fitted) *fitted = std::move(model);
  return out;
}

Tensor bilinear_resize(const Tensor& src, int64_t out_h, int64_t out_w) {
  if (src.ndim() != 3) fail("bilinear_resize expects [h,w,c], got " + shape_str(src.shape()));
  const int64_t h = src.dim(0), w = src.dim(1), c = src.dim(2);
  Tensor dst({out_h, out_w, c});
  const double sy = static_cast<double>(h) / static_cast<double>(out_h);
  const double sx = static_cast<double>(w) / static_cast<double>(out_w);
  for (int64_t oy = 0; oy < out_h; ++oy) {
    double fy = (static_cast<double>(oy) + 0.5) * sy - 0.5;
    fy = std::clamp(fy, 0.0, static_cast<double>(h - 1));
    int64_t y0 = static_cast<int64_t>(std::floor(fy));
    int64_t y1 = std::min(y0 + 1, h - 1);
    double wy = fy - static_cast<double>(y0);
    for (int64_t ox = 0; ox < out_w; ++ox) {
      double fx = (static_cast<double>(ox) + 0.5) * sx - 0.5;
      fx = std::clamp(fx, 0.0, static_cast<double>(w - 1));
      int64_t x0 = static_cast<int64_t>(std::floor(fx));
      int64_t x1 = std::min(x0 + 1, w - 1);
      double wx = fx - static_cast<double>(x0);
      for (int64_t ch = 0; ch < c; ++ch) {
        auto px = [&](int64_t yy, int64_t xx) {
          return static_cast<double>(src.at((yy * w + xx) * c + ch));
        };
        double top = px(y0, x0) * (1 - wx) + px(y0, x1) * wx;
        double bot = px(y1, x0) * (1 - wx) + px(y1, x1) * wx;
        dst.at((oy * out_w + ox) * c + ch) = static_cast<float>(top * (1 - wy) + bot * wy);
      }
    }
  }
  return dst;
}

std::vector<SemanticMotion> segment_and_resize(const FlowField& field,
                                               const std::vector<Box>& boxes, int64_t crop_h,
                                               int64_t crop_w,
                                               std::vector<std::string>* warnings) {
  if (crop_h < 2 || crop_w < 2) fail("segment_and_resize: crop size must be at least 2x2");
  std::vector<SemanticMotion> out;
  for (size_t idx = 0; idx < boxes.size(); ++idx) {
    Box b = boxes[idx];
    // crop from the in-frame intersection
    b.x0 = std::clamp(b.x0, int64_t{0}, field.width);
    b.x1 = std::clamp(b.x1, int64_t{0}, field.width);
    b.y0 = std::clamp(b.y0, int64_t{0}, field.height);
    b.y1 = std::clamp(b.y1, int64_t{0}, field.height);
    if (b.area() <= 0) {
      if (warnings)
        warnings->push_back("segment_and_resize: skipping degenerate box " + std::to_string(idx));
      continue;
    }
    SemanticMotion sem;
    sem.id = static_cast<int64_t>(idx);
    Tensor native({b.height(), b.width(), 2});
    for (int64_t y = b.y0; y < b.y1; ++y)
      for (int64_t x = b.x0; x < b.x1; ++x) {
        Vec2 d = field.at(x, y);
        sem.raw.push_back(d);
        native.at(((y - b.y0) * b.width() + (x - b.x0)) * 2 + 0) = d.u;
        native.at(((y - b.y0) * b.width() + (x - b.x0)) * 2 + 1) = d.v;
      }
    sem.crop = bilinear_resize(native, crop_h, crop_w);
    out.push_back(std::move(sem));
  }
  return out;
}

}  // namespace smast
