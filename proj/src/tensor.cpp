#include "smast/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace smast {

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << "[";
  for (size_t i = 0; i < s.size(); ++i) {
    if (i) os << "x";
    os << s[i];
  }
  os << "]";
  return os.str();
}

void fail(const std::string& msg) { throw Error(msg); }

namespace {
int64_t shape_numel(const Shape& s) {
  int64_t n = 1;
  for (int64_t d : s) {
    if (d < 0) fail("negative dimension in shape " + shape_str(s));
    n *= d;
  }
  return n;
}
}  // namespace

Tensor::Tensor(Shape shape) : shape_(std::move(shape)) {
  data_.assign(static_cast<size_t>(shape_numel(shape_)), 0.0f);
}

Tensor::Tensor(Shape shape, std::vector<float> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (shape_numel(shape_) != static_cast<int64_t>(data_.size()))
    fail("tensor data size " + std::to_string(data_.size()) + " does not match shape " +
         shape_str(shape_));
}

Tensor Tensor::full(Shape shape, float value) {
  Tensor t(std::move(shape));
  std::fill(t.data_.begin(), t.data_.end(), value);
  return t;
}

Tensor Tensor::from_rows(std::initializer_list<std::initializer_list<float>> rows) {
  int64_t m = static_cast<int64_t>(rows.size());
  int64_t n = m ? static_cast<int64_t>(rows.begin()->size()) : 0;
  std::vector<float> data;
  data.reserve(static_cast<size_t>(m * n));
  for (const auto& r : rows) {
    if (static_cast<int64_t>(r.size()) != n) fail("ragged initializer rows");
    data.insert(data.end(), r.begin(), r.end());
  }
  return Tensor({m, n}, std::move(data));
}

int64_t Tensor::cols() const {
  int64_t c = 1;
  for (size_t i = 1; i < shape_.size(); ++i) c *= shape_[i];
  return c;
}

bool Tensor::all_finite() const {
  for (float v : data_)
    if (!std::isfinite(v)) return false;
  return true;
}

Tensor Tensor::reshaped(Shape new_shape) const {
  if (shape_numel(new_shape) != numel())
    fail("reshape " + shape_str(shape_) + " -> " + shape_str(new_shape) +
         " changes element count");
  return Tensor(std::move(new_shape), data_);
}

void zero_grads(const std::vector<Param*>& params) {
  for (Param* p : params) p->zero_grad();
}

void sgd_step(const std::vector<Param*>& params, double lr, double weight_decay) {
  if (lr <= 0.0) fail("sgd_step: learning rate must be positive, got " + std::to_string(lr));
  for (Param* p : params) {
    auto& v = p->value.data();
    const auto& g = p->grad.data();
    for (size_t i = 0; i < v.size(); ++i)
      v[i] = static_cast<float>(v[i] - lr * (static_cast<double>(g[i]) + weight_decay * v[i]));
  }
}

namespace macs {
namespace {
bool g_enabled = false;
uint64_t g_count = 0;
}  // namespace
void enable(bool on) { g_enabled = on; }
bool enabled() { return g_enabled; }
void reset() { g_count = 0; }
uint64_t count() { return g_count; }
void add(uint64_t n) {
  if (g_enabled) g_count += n;
}
}  // namespace macs

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.ndim() != 2 || b.ndim() != 2 || a.dim(1) != b.dim(0))
    fail("matmul shape mismatch: " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  const int64_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  macs::add(static_cast<uint64_t>(m) * static_cast<uint64_t>(k) * static_cast<uint64_t>(n));
  Tensor c({m, n});
  std::vector<double> acc(static_cast<size_t>(n));
  const float* pa = a.data().data();
  const float* pb = b.data().data();
  float* pc = c.data().data();
  for (int64_t i = 0; i < m; ++i) {
    std::fill(acc.begin(), acc.end(), 0.0);
    const float* arow = pa + i * k;
    for (int64_t kk = 0; kk < k; ++kk) {
      const double av = arow[kk];
      const float* brow = pb + kk * n;
      for (int64_t j = 0; j < n; ++j) acc[static_cast<size_t>(j)] += av * brow[j];
    }
    float* crow = pc + i * n;
    for (int64_t j = 0; j < n; ++j) crow[j] = static_cast<float>(acc[static_cast<size_t>(j)]);
  }
  return c;
}

Tensor matmul_naive(const Tensor& a, const Tensor& b) {
  if (a.ndim() != 2 || b.ndim() != 2 || a.dim(1) != b.dim(0))
    fail("matmul shape mismatch: " + shape_str(a.shape()) + " x " + shape_str(b.shape()));
  const int64_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
  Tensor c({m, n});
  for (int64_t i = 0; i < m; ++i)
    for (int64_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (int64_t kk = 0; kk < k; ++kk)
        s += static_cast<double>(a.at2(i, kk)) * static_cast<double>(b.at2(kk, j));
      c.at2(i, j) = static_cast<float>(s);
    }
  return c;
}

Tensor transpose(const Tensor& a) {
  if (a.ndim() != 2) fail("transpose expects a matrix, got " + shape_str(a.shape()));
  Tensor t({a.dim(1), a.dim(0)});
  for (int64_t i = 0; i < a.dim(0); ++i)
    for (int64_t j = 0; j < a.dim(1); ++j) t.at2(j, i) = a.at2(i, j);
  return t;
}

Tensor softmax_rows(const Tensor& x) {
  const int64_t m = x.rows(), n = x.cols();
  Tensor y(x.shape());
  for (int64_t i = 0; i < m; ++i) {
    float mx = x.at2(i, 0);
    for (int64_t j = 1; j < n; ++j) mx = std::max(mx, x.at2(i, j));
    double denom = 0.0;
    for (int64_t j = 0; j < n; ++j) {
      float e = std::exp(x.at2(i, j) - mx);
      y.at2(i, j) = e;
      denom += e;
    }
    for (int64_t j = 0; j < n; ++j)
      y.at2(i, j) = static_cast<float>(y.at2(i, j) / denom);
  }
  return y;
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias) {
  const int64_t m = x.rows(), n = x.cols();
  if (gain.numel() != n || bias.numel() != n)
    fail("layer_norm gain/bias size must match feature dim " + std::to_string(n));
  constexpr double kEps = 1e-5;
  Tensor y(x.shape());
  for (int64_t i = 0; i < m; ++i) {
    double mean = 0.0;
    for (int64_t j = 0; j < n; ++j) mean += x.at2(i, j);
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (int64_t j = 0; j < n; ++j) {
      double d = x.at2(i, j) - mean;
      var += d * d;
    }
    var /= static_cast<double>(n);
    const double inv = 1.0 / std::sqrt(var + kEps);
    for (int64_t j = 0; j < n; ++j) {
      double xhat = (x.at2(i, j) - mean) * inv;
      y.at2(i, j) = static_cast<float>(xhat * gain.at(j) + bias.at(j));
    }
  }
  return y;
}

}  // namespace smast
