#pragma once

#include <cstdint>
#include <initializer_list>
#include <stdexcept>
#include <string>
#include <vector>

namespace smast {

using Shape = std::vector<int64_t>;

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

std::string shape_str(const Shape& s);
[[noreturn]] void fail(const std::string& msg);

/// Dense row-major f32 tensor. Values are immutable once an op has produced
/// the tensor; mutation helpers exist for construction and for Param updates.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(Shape shape);
  Tensor(Shape shape, std::vector<float> data);

  static Tensor zeros(Shape shape) { return Tensor(std::move(shape)); }
  static Tensor full(Shape shape, float value);
  static Tensor scalar(float value) { return Tensor({1}, {value}); }
  // 2-D convenience for tests and small fixtures.
  static Tensor from_rows(std::initializer_list<std::initializer_list<float>> rows);

  int64_t numel() const { return static_cast<int64_t>(data_.size()); }
  int64_t ndim() const { return static_cast<int64_t>(shape_.size()); }
  int64_t dim(int64_t i) const { return shape_[static_cast<size_t>(i)]; }
  // Row/column view of a tensor interpreted as a matrix: the first axis is
  // rows, all remaining axes are flattened into columns.
  int64_t rows() const { return ndim() == 0 ? 0 : shape_[0]; }
  int64_t cols() const;

  const Shape& shape() const { return shape_; }
  bool same_shape(const Tensor& o) const { return shape_ == o.shape_; }

  float at(int64_t i) const { return data_[static_cast<size_t>(i)]; }
  float& at(int64_t i) { return data_[static_cast<size_t>(i)]; }
  float at2(int64_t r, int64_t c) const { return data_[static_cast<size_t>(r * cols() + c)]; }
  float& at2(int64_t r, int64_t c) { return data_[static_cast<size_t>(r * cols() + c)]; }

  const std::vector<float>& data() const { return data_; }
  std::vector<float>& data() { return data_; }

  bool all_finite() const;
  Tensor reshaped(Shape new_shape) const;

 private:
  Shape shape_;
  std::vector<float> data_;
};

/// Learnable value plus its gradient slot. Gradients accumulate additively
/// until zero_grad.
struct Param {
  Tensor value;
  Tensor grad;
  std::string name;

  Param() = default;
  explicit Param(Tensor v, std::string n = "")
      : value(std::move(v)), grad(Tensor::zeros(value.shape())), name(std::move(n)) {}

  void zero_grad() { std::fill(grad.data().begin(), grad.data().end(), 0.0f); }
};

void zero_grads(const std::vector<Param*>& params);

// value <- value - lr * (grad + weight_decay * value)
void sgd_step(const std::vector<Param*>& params, double lr, double weight_decay);

// ---- multiply-accumulate instrumentation ------------------------------------

namespace macs {
void enable(bool on);
bool enabled();
void reset();
uint64_t count();
void add(uint64_t n);
}  // namespace macs

// ---- plain forward kernels ---------------------------------------------------

// C[m,n] = A[m,k] * B[k,n]; f64 accumulation, counts m*k*n MACs when enabled.
Tensor matmul(const Tensor& a, const Tensor& b);
// Reference implementation kept deliberately naive for cross-checking.
Tensor matmul_naive(const Tensor& a, const Tensor& b);
Tensor transpose(const Tensor& a);
// Row-wise softmax with per-row max subtraction; denominators in f64.
Tensor softmax_rows(const Tensor& x);
// Per-row standardization followed by gain/bias; eps = 1e-5.
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias);

}  // namespace smast
