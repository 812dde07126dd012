#include <doctest.h>

#include <cmath>

#include "smast/gradcheck.hpp"
#include "smast/rng.hpp"
#include "smast/tape.hpp"

using namespace smast;

TEST_CASE("backward of sum(W x) gives x broadcast") {
  Param w(Tensor::from_rows({{0.5f, -0.25f}, {1.0f, 2.0f}}));
  Tensor x = Tensor::from_rows({{3}, {4}});
  Tape t;
  Var wv = t.param(w);
  Var xv = t.constant(x);
  Var loss = t.sum_all(t.matmul(wv, xv));
  t.backward(loss);
  CHECK(w.grad.at2(0, 0) == 3.0f);
  CHECK(w.grad.at2(0, 1) == 4.0f);
  CHECK(w.grad.at2(1, 0) == 3.0f);
  CHECK(w.grad.at2(1, 1) == 4.0f);
}

TEST_CASE("backward twice without zero_grads doubles the gradients") {
  Param w(Tensor::from_rows({{1.0f, 2.0f}}));
  auto run = [&] {
    Tape t;
    Var wv = t.param(w);
    Var loss = t.sum_all(t.mul(wv, wv));
    t.backward(loss);
  };
  run();
  Tensor once = w.grad;
  run();
  for (int64_t i = 0; i < once.numel(); ++i) CHECK(w.grad.at(i) == 2.0f * once.at(i));
}

TEST_CASE("backward on empty tape is a no-op") {
  Tape t;
  t.backward(Var{});
}

TEST_CASE("check_gradients on f(x)=x^2 at x=3") {
  Param x(Tensor::scalar(3.0f));
  auto f = [&](bool with_grad) {
    Tape t;
    Var xv = t.param(x);
    Var loss = t.sum_all(t.mul(xv, xv));
    if (with_grad) t.backward(loss);
    double v = x.value.at(0);
    return v * v;
  };
  double err = check_gradients(f, {&x}, 1e-4);
  CHECK(err < 1e-6);
  // constant function: analytic and numeric both zero
  Param y(Tensor::scalar(2.0f));
  auto fc = [&](bool with_grad) {
    Tape t;
    Var yv = t.param(y);
    Var loss = t.sum_all(t.scale(yv, 0.0));
    if (with_grad) t.backward(loss);
    return static_cast<double>(t.val(loss).at(0));
  };
  CHECK(check_gradients(fc, {&y}, 1e-3) == 0.0);
}

TEST_CASE("check_gradients rejects out-of-range step") {
  Param x(Tensor::scalar(1.0f));
  auto f = [&](bool) { return 0.0; };
  CHECK_THROWS_AS(check_gradients(f, {&x}, 0.1), Error);
}

namespace {

// Runs check_gradients for a loss built on top of a single op applied to a
// couple of params, at several random settings. The scalar handed back for
// finite differencing is accumulated in f64 from the op's f32 output so the
// probe is not quantized by a single f32 store of the loss.
template <class BuildLoss>
double op_grad_err(BuildLoss build, std::vector<Param*> params, uint64_t seed, double h = 1e-2,
                   float lo = 0.2f, float hi = 1.2f) {
  double worst = 0.0;
  Rng rng(seed);
  for (int trial = 0; trial < 10; ++trial) {
    // positive draws by default keep bilinear gradients bounded away from the
    // finite difference noise floor; curvature-heavy ops pass wider ranges
    for (Param* p : params)
      for (float& v : p->value.data()) v = rng.uniformf(lo, hi);
    Tensor proj;  // random projection so every output coordinate matters
    auto f = [&](bool with_grad) {
      Tape t;
      Var out = build(t);
      if (!proj.same_shape(t.val(out))) proj = random_tensor(t.val(out).shape(), rng, 0.5f, 1.5f);
      if (with_grad) {
        Var loss = t.sum_all(t.mul(out, t.constant(proj)));
        t.backward(loss);
      }
      double acc = 0.0;
      for (int64_t i = 0; i < proj.numel(); ++i)
        acc += static_cast<double>(t.val(out).at(i)) * proj.at(i);
      return acc;
    };
    worst = std::max(worst, check_gradients(f, params, h, rng.next_u64()));
    proj = Tensor();
  }
  return worst;
}

}  // namespace

TEST_CASE("every backward rule passes finite differences at 10 random settings") {
  Param a(Tensor({3, 4})), b(Tensor({3, 4})), w(Tensor({4, 3})), s(Tensor({1}));
  Param gain(Tensor({4})), bias(Tensor({4}));
  Param sq(Tensor({4, 4}));

  SUBCASE("matmul") {
    double e = op_grad_err([&](Tape& t) { return t.matmul(t.param(a), t.param(w)); }, {&a, &w}, 1);
    CHECK(e < 1e-3);
  }
  SUBCASE("add sub mul") {
    double e = op_grad_err(
        [&](Tape& t) { return t.mul(t.add(t.param(a), t.param(b)), t.sub(t.param(a), t.param(b))); },
        {&a, &b}, 2);
    CHECK(e < 1e-3);
  }
  SUBCASE("scale add_const scale_by") {
    double e = op_grad_err(
        [&](Tape& t) {
          return t.scale_by(t.add_const(t.scale(t.param(a), 1.7), 0.3), t.param(s));
        },
        {&a, &s}, 3);
    CHECK(e < 1e-3);
  }
  SUBCASE("sigmoid tanh gelu") {
    double e = op_grad_err(
        [&](Tape& t) { return t.gelu(t.add(t.sigmoid(t.param(a)), t.tanh_(t.param(b)))); },
        {&a, &b}, 4);
    CHECK(e < 1e-3);
  }
  // softmax and layer_norm Jacobians have null directions, so these two read
  // out a single column per row (gradients bounded away from the noise floor)
  SUBCASE("softmax_rows") {
    Rng rng(5);
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
      for (float& v : a.value.data()) v = rng.uniformf(-0.7f, 0.7f);
      std::vector<float> w(3);
      for (float& x : w) x = rng.uniformf(0.8f, 1.2f);
      auto f = [&](bool wg) {
        Tape t;
        Var out = t.softmax_rows(t.param(a));
        if (wg) {
          Tensor sel({3, 4});
          for (int i = 0; i < 3; ++i) sel.at2(i, i % 4) = w[static_cast<size_t>(i)];
          t.backward(t.sum_all(t.mul(out, t.constant(sel))));
        }
        double acc = 0.0;
        for (int i = 0; i < 3; ++i)
          acc += static_cast<double>(t.val(out).at2(i, i % 4)) * w[static_cast<size_t>(i)];
        return acc;
      };
      worst = std::max(worst, check_gradients(f, {&a}, 1e-2, rng.next_u64()));
    }
    CHECK(worst < 1e-3);
  }
  SUBCASE("layer_norm") {
    const float anchors[4] = {-1.0f, -0.33f, 0.33f, 1.0f};
    Rng rng(6);
    double worst = 0.0;
    for (int trial = 0; trial < 10; ++trial) {
      for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 4; ++j) a.value.at2(i, j) = anchors[j] + rng.uniformf(-0.1f, 0.1f);
      for (float& v : gain.value.data()) v = rng.uniformf(0.5f, 1.5f);
      for (float& v : bias.value.data()) v = rng.uniformf(-0.5f, 0.5f);
      std::vector<float> w(3);
      for (float& x : w) x = rng.uniformf(0.8f, 1.2f);
      auto f = [&](bool wg) {
        Tape t;
        Var out = t.layer_norm(t.param(a), t.param(gain), t.param(bias));
        if (wg) {
          Tensor sel({3, 4});
          for (int i = 0; i < 3; ++i) sel.at2(i, i % 4) = w[static_cast<size_t>(i)];
          t.backward(t.sum_all(t.mul(out, t.constant(sel))));
        }
        double acc = 0.0;
        for (int i = 0; i < 3; ++i)
          acc += static_cast<double>(t.val(out).at2(i, i % 4)) * w[static_cast<size_t>(i)];
        return acc;
      };
      worst = std::max(worst, check_gradients(f, {&a, &gain, &bias}, 5e-3, rng.next_u64()));
    }
    CHECK(worst < 1e-3);
  }
  SUBCASE("transpose reshape slice concat") {
    double e = op_grad_err(
        [&](Tape& t) {
          Var x = t.param(a);
          Var y = t.transpose(x);                                  // 4x3
          Var z = t.slice_rows(y, 1, 3);                           // 2x3
          Var c = t.concat_rows({z, z});                           // 4x3
          Var d = t.concat_cols({c, t.reshape(x, {4, 3})});        // 4x6
          return d;
        },
        {&a}, 7);
    CHECK(e < 1e-3);
  }
  SUBCASE("means sums broadcasts rows_dot") {
    double e = op_grad_err(
        [&](Tape& t) {
          Var x = t.param(a);
          Var m = t.mean_rows(x);                       // 1x4
          Var c = t.mean_cols(x);                       // 3x1
          Var y = t.add_row_broadcast(x, t.reshape(m, {4}));
          Var z = t.add_col_broadcast(y, t.reshape(c, {3}));
          return t.rows_dot(z, t.param(b));
        },
        {&a, &b}, 8);
    CHECK(e < 1e-3);
  }
  SUBCASE("log_floor") {
    double e = op_grad_err(
        [&](Tape& t) { return t.log_floor(t.add_const(t.sigmoid(t.param(a)), 0.05)); }, {&a}, 9);
    CHECK(e < 1e-3);
  }
  SUBCASE("matinv and ridge") {
    double e = op_grad_err(
        [&](Tape& t) {
          Var m = t.param(sq);
          Var spd = t.add(t.matmul(m, t.transpose(m)), t.constant([&] {
            Tensor eye({4, 4});
            for (int64_t i = 0; i < 4; ++i) eye.at2(i, i) = 0.8f;
            return eye;
          }()));
          return t.matinv(t.ridge_regularize(spd, 1e-2));
        },
        {&sq}, 10);
    CHECK(e < 1e-2);
  }
  SUBCASE("sin_cos_encode") {
    Param pos(Tensor({5}));
    double e = op_grad_err(
        [&](Tape& t) { return t.sin_cos_encode(t.param(pos), 8, 100.0); }, {&pos}, 11, 3e-3,
        -2.0f, 2.0f);
    CHECK(e < 1e-3);
  }
  SUBCASE("pairwise_sq_mahalanobis") {
    Param q(Tensor({3, 4})), k(Tensor({5, 4})), sm(Tensor({4, 4}));
    double e = op_grad_err(
        [&](Tape& t) {
          return t.pairwise_sq_mahalanobis(t.param(q), t.param(k), t.param(sm));
        },
        {&q, &k, &sm}, 12, 1e-2, -0.8f, 0.8f);
    CHECK(e < 1e-3);
  }
}

TEST_CASE("mat_inverse produces an actual inverse") {
  Rng rng(42);
  Tensor a = random_tensor({6, 6}, rng);
  for (int64_t i = 0; i < 6; ++i) a.at2(i, i) += 3.0f;  // keep well-conditioned
  Tensor inv = mat_inverse(a);
  Tensor prod = matmul(a, inv);
  for (int64_t i = 0; i < 6; ++i)
    for (int64_t j = 0; j < 6; ++j)
      CHECK(std::fabs(prod.at2(i, j) - (i == j ? 1.0f : 0.0f)) < 1e-4);
}
