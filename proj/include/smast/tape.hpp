#pragma once

#include <functional>
#include <vector>

#include "smast/tensor.hpp"

namespace smast {

struct Var {
  int32_t id = -1;
  bool valid() const { return id >= 0; }
};

/// Records forward ops in execution order and replays analytic backward rules
/// in exact reverse order. Gradients accumulate additively across fan-out;
/// leaves created from Params accumulate into Param::grad.
class Tape {
 public:
  Var constant(Tensor value);
  Var param(Param& p);

  const Tensor& val(Var v) const { return nodes_[static_cast<size_t>(v.id)].value; }
  size_t size() const { return nodes_.size(); }

  Var matmul(Var a, Var b);
  Var add(Var a, Var b);
  Var sub(Var a, Var b);
  Var mul(Var a, Var b);          // element-wise
  Var scale(Var a, double c);     // c * a
  Var add_const(Var a, double c); // a + c
  Var scale_by(Var a, Var s);     // s scalar Var times a
  Var sigmoid(Var a);
  Var tanh_(Var a);
  Var gelu(Var a);
  Var softmax_rows(Var a);
  Var layer_norm(Var x, Var gain, Var bias);
  Var transpose(Var a);
  Var concat_cols(const std::vector<Var>& parts);
  Var concat_rows(const std::vector<Var>& parts);
  Var slice_rows(Var a, int64_t r0, int64_t r1);  // [r0, r1)
  Var reshape(Var a, Shape shape);
  Var mean_rows(Var a);  // [m,n] -> [1,n]
  Var mean_cols(Var a);  // [m,n] -> [m,1]
  Var sum_all(Var a);    // -> [1]
  Var rows_dot(Var a, Var b);               // [m,n],[m,n] -> [m,1]
  Var add_col_broadcast(Var m, Var c);      // m[i,j] + c[i]
  Var add_row_broadcast(Var m, Var r);      // m[i,j] + r[j]
  Var matinv(Var a);
  Var log_floor(Var a, double floor = 1e-12);
  // out[i,2n] = sin(p_i / psi^(2n/d)), out[i,2n+1] = cos(...); d channels.
  Var sin_cos_encode(Var pos, int64_t channels, double psi);
  // D[i,j] = (q_i - k_j) S (q_i - k_j)^T, computed pairwise in f64.
  Var pairwise_sq_mahalanobis(Var q, Var k, Var s);
  // S + (c * trace(S) / n) * I, with the trace term differentiated.
  Var ridge_regularize(Var s, double c);

  // Seeds d(loss)/d(loss)=1 and accumulates into every reachable Param.grad.
  // No-op on an empty tape or a loss with no recorded parents.
  void backward(Var loss);

 private:
  struct Node {
    Tensor value;
    // Adds contributions to parent grads / bound Param given this node's grad.
    std::function<void(Tape&, const Tensor&)> back;
  };

  Var push(Tensor value, std::function<void(Tape&, const Tensor&)> back);
  Tensor& grad_buf(int32_t id);

  std::vector<Node> nodes_;
  std::vector<Tensor> grads_;
  std::vector<char> grad_set_;
};

// Plain-tensor matrix inverse via partial-pivot Gauss-Jordan (f64 internally).
Tensor mat_inverse(const Tensor& a);

}  // namespace smast
