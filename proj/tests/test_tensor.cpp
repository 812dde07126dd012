#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>

#include "smast/rng.hpp"
#include "smast/smtf.hpp"
#include "smast/tensor.hpp"

using namespace smast;

TEST_CASE("matmul identity and small products") {
  Tensor I = Tensor::from_rows({{1, 0}, {0, 1}});
  Tensor v = Tensor::from_rows({{3}, {4}});
  Tensor r = matmul(I, v);
  CHECK(r.at2(0, 0) == 3.0f);
  CHECK(r.at2(1, 0) == 4.0f);

  Tensor a = Tensor::from_rows({{1, 2}});
  Tensor b = Tensor::from_rows({{3}, {4}});
  CHECK(matmul(a, b).at(0) == 11.0f);
}

TEST_CASE("matmul equals triple-loop oracle on random shapes") {
  Rng rng(17);
  for (int trial = 0; trial < 20; ++trial) {
    int64_t m = rng.uniform_int(1, 16), k = rng.uniform_int(1, 16), n = rng.uniform_int(1, 16);
    Tensor a = random_tensor({m, k}, rng);
    Tensor b = random_tensor({k, n}, rng);
    Tensor fast = matmul(a, b);
    Tensor ref = matmul_naive(a, b);
    for (int64_t i = 0; i < fast.numel(); ++i)
      CHECK(std::fabs(fast.at(i) - ref.at(i)) < 1e-5);
  }
}

TEST_CASE("matmul rejects mismatched shapes with both shapes named") {
  Tensor a({2, 3});
  Tensor b({4, 2});
  try {
    matmul(a, b);
    FAIL("expected a shape error");
  } catch (const Error& e) {
    std::string msg = e.what();
    CHECK(msg.find("[2x3]") != std::string::npos);
    CHECK(msg.find("[4x2]") != std::string::npos);
  }
}

TEST_CASE("mac counter is exact for a chain of matmuls") {
  macs::enable(true);
  macs::reset();
  Tensor a({3, 4}), b({4, 2}), c({2, 5});
  Tensor ab = matmul(a, b);
  matmul(ab, c);
  CHECK(macs::count() == 3u * 4u * 2u + 3u * 2u * 5u);
  macs::enable(false);
  macs::reset();
  matmul(a, b);
  CHECK(macs::count() == 0u);
}

TEST_CASE("softmax rows: symmetry, shift invariance, closed form") {
  Tensor x = Tensor::from_rows({{0, 0}});
  Tensor y = softmax_rows(x);
  CHECK(y.at(0) == doctest::Approx(0.5));
  CHECK(y.at(1) == doctest::Approx(0.5));

  Tensor big = Tensor::from_rows({{1000, 1000}});
  Tensor yb = softmax_rows(big);
  CHECK(yb.all_finite());
  CHECK(yb.at(0) == doctest::Approx(0.5));

  Tensor z = Tensor::from_rows({{0.0f, std::log(3.0f)}});
  Tensor yz = softmax_rows(z);
  CHECK(yz.at(0) == doctest::Approx(0.25).epsilon(1e-5));
  CHECK(yz.at(1) == doctest::Approx(0.75).epsilon(1e-5));
}

TEST_CASE("softmax rows sum to one on random input") {
  Rng rng(3);
  Tensor x = random_tensor({7, 9}, rng, -5.0f, 5.0f);
  Tensor y = softmax_rows(x);
  for (int64_t i = 0; i < 7; ++i) {
    double s = 0;
    for (int64_t j = 0; j < 9; ++j) s += y.at2(i, j);
    CHECK(std::fabs(s - 1.0) < 1e-6);
  }
}

TEST_CASE("layer_norm zero-variance row and standardization") {
  Tensor gain = Tensor::full({4}, 1.0f);
  Tensor bias = Tensor::zeros({4});
  Tensor x = Tensor::from_rows({{1, 1, 1, 1}});
  Tensor y = layer_norm(x, gain, bias);
  for (int64_t j = 0; j < 4; ++j) CHECK(std::fabs(y.at(j)) < 1e-3);

  Tensor g2 = Tensor::full({2}, 1.0f), b2 = Tensor::zeros({2});
  Tensor x2 = Tensor::from_rows({{0, 2}});
  Tensor y2 = layer_norm(x2, g2, b2);
  CHECK(y2.at(0) == doctest::Approx(-1.0).epsilon(1e-4));
  CHECK(y2.at(1) == doctest::Approx(1.0).epsilon(1e-4));

  // gain of zero annihilates, bias remains
  Tensor g0 = Tensor::zeros({2});
  Tensor b3 = Tensor::full({2}, 0.25f);
  Tensor y3 = layer_norm(x2, g0, b3);
  CHECK(y3.at(0) == 0.25f);
  CHECK(y3.at(1) == 0.25f);
}

TEST_CASE("layer_norm rows have mean 0 variance 1 before gain/bias") {
  Rng rng(11);
  Tensor x = random_tensor({5, 16}, rng, -3.0f, 3.0f);
  Tensor y = layer_norm(x, Tensor::full({16}, 1.0f), Tensor::zeros({16}));
  for (int64_t i = 0; i < 5; ++i) {
    double mean = 0, var = 0;
    for (int64_t j = 0; j < 16; ++j) mean += y.at2(i, j);
    mean /= 16;
    for (int64_t j = 0; j < 16; ++j) var += (y.at2(i, j) - mean) * (y.at2(i, j) - mean);
    var /= 16;
    CHECK(std::fabs(mean) < 1e-5);
    CHECK(std::fabs(var - 1.0) < 1e-4);
  }
}

TEST_CASE("sgd_step update rule and lr validation") {
  Param p(Tensor::scalar(1.0f));
  p.grad.at(0) = 2.0f;
  sgd_step({&p}, 0.1, 0.0);
  CHECK(p.value.at(0) == doctest::Approx(0.8));

  Param q(Tensor::scalar(1.0f));
  q.grad.at(0) = 0.0f;
  sgd_step({&q}, 1e-4, 1e-6);
  CHECK(q.value.at(0) == doctest::Approx(1.0 * (1.0 - 1e-10)));

  CHECK_THROWS_AS(sgd_step({&p}, 0.0, 0.0), Error);
}

TEST_CASE("SMTF round-trip is bit-exact") {
  Rng rng(99);
  Tensor t = random_tensor({3, 4, 5}, rng, -10.0f, 10.0f);
  t.at(0) = 0.1f;  // not exactly representable in decimal, fine in binary
  auto path = std::filesystem::temp_directory_path() / "smast_t.smtf";
  smtf_write(path.string(), t);
  Tensor r = smtf_read(path.string());
  REQUIRE(r.shape() == t.shape());
  for (int64_t i = 0; i < t.numel(); ++i) CHECK(r.at(i) == t.at(i));
  std::filesystem::remove(path);
}

TEST_CASE("SMTF rejects garbage") {
  auto path = std::filesystem::temp_directory_path() / "smast_bad.smtf";
  {
    FILE* f = fopen(path.string().c_str(), "wb");
    fputs("not a tensor", f);
    fclose(f);
  }
  CHECK_THROWS_AS(smtf_read(path.string()), Error);
  std::filesystem::remove(path);
}
