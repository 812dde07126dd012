#include "smast/tape.hpp"

#include <cmath>

namespace smast {

namespace {
void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (!a.same_shape(b))
    fail(std::string(op) + " shape mismatch: " + shape_str(a.shape()) + " vs " +
         shape_str(b.shape()));
}
}  // namespace

Var Tape::push(Tensor value, std::function<void(Tape&, const Tensor&)> back) {
  nodes_.push_back(Node{std::move(value), std::move(back)});
  return Var{static_cast<int32_t>(nodes_.size() - 1)};
}

Tensor& Tape::grad_buf(int32_t id) {
  if (grad_set_[static_cast<size_t>(id)] == 0) {
    grads_[static_cast<size_t>(id)] = Tensor::zeros(nodes_[static_cast<size_t>(id)].value.shape());
    grad_set_[static_cast<size_t>(id)] = 1;
  }
  return grads_[static_cast<size_t>(id)];
}

Var Tape::constant(Tensor value) { return push(std::move(value), nullptr); }

Var Tape::param(Param& p) {
  Param* pp = &p;
  return push(p.value, [pp](Tape&, const Tensor& g) {
    auto& acc = pp->grad.data();
    const auto& gd = g.data();
    for (size_t i = 0; i < acc.size(); ++i) acc[i] += gd[i];
  });
}

Var Tape::matmul(Var a, Var b) {
  Tensor c = smast::matmul(val(a), val(b));
  return push(std::move(c), [a, b](Tape& t, const Tensor& g) {
    const Tensor& av = t.val(a);
    const Tensor& bv = t.val(b);
    Tensor da = smast::matmul(g, smast::transpose(bv));
    Tensor db = smast::matmul(smast::transpose(av), g);
    auto& ga = t.grad_buf(a.id).data();
    for (size_t i = 0; i < ga.size(); ++i) ga[i] += da.data()[i];
    auto& gb = t.grad_buf(b.id).data();
    for (size_t i = 0; i < gb.size(); ++i) gb[i] += db.data()[i];
  });
}

Var Tape::add(Var a, Var b) {
  check_same_shape(val(a), val(b), "add");
  Tensor c = val(a);
  const auto& bd = val(b).data();
  for (size_t i = 0; i < c.data().size(); ++i) c.data()[i] += bd[i];
  return push(std::move(c), [a, b](Tape& t, const Tensor& g) {
    auto& ga = t.grad_buf(a.id).data();
    auto& gb = t.grad_buf(b.id).data();
    for (size_t i = 0; i < ga.size(); ++i) {
      ga[i] += g.data()[i];
      gb[i] += g.data()[i];
    }
  });
}

Var Tape::sub(Var a, Var b) {
  check_same_shape(val(a), val(b), "sub");
  Tensor c = val(a);
  const auto& bd = val(b).data();
  for (size_t i = 0; i < c.data().size(); ++i) c.data()[i] -= bd[i];
  return push(std::move(c), [a, b](Tape& t, const Tensor& g) {
    auto& ga = t.grad_buf(a.id).data();
    auto& gb = t.grad_buf(b.id).data();
    for (size_t i = 0; i < ga.size(); ++i) {
      ga[i] += g.data()[i];
      gb[i] -= g.data()[i];
    }
  });
}

Var Tape::mul(Var a, Var b) {
  check_same_shape(val(a), val(b), "mul");
  Tensor c = val(a);
  const auto& bd = val(b).data();
  for (size_t i = 0; i < c.data().size(); ++i) c.data()[i] *= bd[i];
  return push(std::move(c), [a, b](Tape& t, const Tensor& g) {
    const auto& av = t.val(a).data();
    const auto& bv = t.val(b).data();
    auto& ga = t.grad_buf(a.id).data();
    auto& gb = t.grad_buf(b.id).data();
    for (size_t i = 0; i < ga.size(); ++i) {
      ga[i] += g.data()[i] * bv[i];
      gb[i] += g.data()[i] * av[i];
    }
  });
}

Var Tape::scale(Var a, double c) {
  Tensor y = val(a);
  for (float& v : y.data()) v = static_cast<float>(v * c);
  return push(std::move(y), [a, c](Tape& t, const Tensor& g) {
    auto& ga = t.grad_buf(a.id).data();
    for (size_t i = 0; i < ga.size(); ++i) ga[i] += static_cast<float>(g.data()[i] * c);
  });
}

Var Tape::add_const(Var a, double c) {
  Tensor y = val(a);
  for (float& v : y.data()) v = static_cast<float>(v + c);
  return push(std::move(y), [a](Tape& t, const Tensor& g) {
    auto& ga = t.grad_buf(a.id).data();
    for (size_t i = 0; i < ga.size(); ++i) ga[i] += g.data()[i];
  });
}

Var Tape::scale_by(Var a, Var s) {
  if (val(s).numel() != 1) fail("scale_by expects a scalar, got " + shape_str(val(s).shape()));
  const float sv = val(s).at(0);
  Tensor y = val(a);
  for (float& v : y.data()) v *= sv;
  return push(std::move(y), [a, s](Tape& t, const Tensor& g) {
    const float svv = t.val(s).at(0);
    const auto& av = t.val(a).data();
    auto& ga = t.grad_buf(a.id).data();
    double ds = 0.0;
    for (size_t i = 0; i < ga.size(); ++i) {
      ga[i] += g.data()[i] * svv;
      ds += static_cast<double>(g.data()[i]) * av[i];
    }
    t.grad_buf(s.id).at(0) += static_cast<float>(ds);
  });
}

Var Tape::sigmoid(Var a) {
  Tensor y = val(a);
  for (float& v : y.data()) v = 1.0f / (1.0f + std::exp(-v));
  Tensor yc = y;
  return push(std::move(y), [a, yc](Tape& t, const Tensor& g) {
    auto& ga = t.grad_buf(a.id).data();
    for (size_t i = 0; i < ga.size(); ++i) {
      float yv = yc.data()[i];
      ga[i] += g.data()[i] * yv * (1.0f - yv);
    }
  });
}

Var Tape::tanh_(Var a) {
  Tensor y = val(a);
  for (float& v : y.data()) v = std::tanh(v);
  Tensor yc = y;
  return push(std::move(y), [a, yc](Tape& t, const Tensor& g) {
    auto& ga = t.grad_buf(a.id).data();
    for (size_t i = 0; i < ga.size(); ++i) {
      float yv = yc.data()[i];
      ga[i] += g.data()[i] * (1.0f - yv * yv);
    }
  });
}

Var Tape::gelu(Var a) {
  // tanh approximation
  constexpr double kC = 0.7978845608028654;  // sqrt(2/pi)
  constexpr double kA = 0.044715;
  Tensor y = val(a);
  for (float& v : y.data()) {
    double x = v;
    double u = kC * (x + kA * x * x * x);
    v = static_cast<float>(0.5 * x * (1.0 + std::tanh(u)));
  }
  return push(std::move(y), [a](Tape& t, const Tensor& g) {
    const auto& av = t.val(a).data();
    auto& ga = t.grad_buf(a.id).data();
    for (size_t i = 0; i < ga.size(); ++i) {
      double x = av[i];
      double u = kC * (x + kA * x * x * x);
      double th = std::tanh(u);
      double du = kC * (1.0 + 3.0 * kA * x * x);
      double d = 0.5 * (1.0 + th) + 0.5 * x * (1.0 - th * th) * du;
      ga[i] += static_cast<float>(g.data()[i] * d);
    }
  });
}

Var Tape::softmax_rows(Var a) {
  Tensor y = smast::softmax_rows(val(a));
  Tensor yc = y;
  return push(std::move(y), [a, yc](Tape& t, const Tensor& g) {
    const int64_t m = yc.rows(), n = yc.cols();
    auto& ga = t.grad_buf(a.id);
    for (int64_t i = 0; i < m; ++i) {
      double dot = 0.0;
      for (int64_t j = 0; j < n; ++j)
        dot += static_cast<double>(g.at2(i, j)) * yc.at2(i, j);
      for (int64_t j = 0; j < n; ++j)
        ga.at2(i, j) += static_cast<float>(yc.at2(i, j) * (g.at2(i, j) - dot));
    }
  });
}

Var Tape::layer_norm(Var x, Var gain, Var bias) {
  Tensor y = smast::layer_norm(val(x), val(gain), val(bias));
  return push(std::move(y), [x, gain, bias](Tape& t, const Tensor& g) {
    constexpr double kEps = 1e-5;
    const Tensor& xv = t.val(x);
    const Tensor& gv = t.val(gain);
    const int64_t m = xv.rows(), n = xv.cols();
    Tensor& gx = t.grad_buf(x.id);
    Tensor& gg = t.grad_buf(gain.id);
    Tensor& gb = t.grad_buf(bias.id);
    for (int64_t i = 0; i < m; ++i) {
      double mean = 0.0;
      for (int64_t j = 0; j < n; ++j) mean += xv.at2(i, j);
      mean /= static_cast<double>(n);
      double var = 0.0;
      for (int64_t j = 0; j < n; ++j) {
        double d = xv.at2(i, j) - mean;
        var += d * d;
      }
      var /= static_cast<double>(n);
      const double inv = 1.0 / std::sqrt(var + kEps);
      // dxhat = dy * gain; dx = inv * (dxhat - mean(dxhat) - xhat * mean(dxhat*xhat))
      double s1 = 0.0, s2 = 0.0;
      std::vector<double> xhat(static_cast<size_t>(n)), dxh(static_cast<size_t>(n));
      for (int64_t j = 0; j < n; ++j) {
        xhat[static_cast<size_t>(j)] = (xv.at2(i, j) - mean) * inv;
        dxh[static_cast<size_t>(j)] = static_cast<double>(g.at2(i, j)) * gv.at(j);
        s1 += dxh[static_cast<size_t>(j)];
        s2 += dxh[static_cast<size_t>(j)] * xhat[static_cast<size_t>(j)];
      }
      s1 /= static_cast<double>(n);
      s2 /= static_cast<double>(n);
      for (int64_t j = 0; j < n; ++j) {
        gx.at2(i, j) += static_cast<float>(inv * (dxh[static_cast<size_t>(j)] - s1 -
                                                  xhat[static_cast<size_t>(j)] * s2));
        gg.at(j) += static_cast<float>(g.at2(i, j) * xhat[static_cast<size_t>(j)]);
        gb.at(j) += g.at2(i, j);
      }
    }
  });
}

Var Tape::transpose(Var a) {
  Tensor y = smast::transpose(val(a));
  return push(std::move(y), [a](Tape& t, const Tensor& g) {
    Tensor gt = smast::transpose(g);
    auto& ga = t.grad_buf(a.id).data();
    for (size_t i = 0; i < ga.size(); ++i) ga[i] += gt.data()[i];
  });
}

Var Tape::concat_cols(const std::vector<Var>& parts) {
  if (parts.empty()) fail("concat_cols: empty input");
  const int64_t m = val(parts[0]).rows();
  int64_t total = 0;
  for (Var p : parts) {
    if (val(p).rows() != m) fail("concat_cols: row mismatch");
    total += val(p).cols();
  }
  Tensor y({m, total});
  int64_t off = 0;
  for (Var p : parts) {
    const Tensor& pv = val(p);
    for (int64_t i = 0; i < m; ++i)
      for (int64_t j = 0; j < pv.cols(); ++j) y.at2(i, off + j) = pv.at2(i, j);
    off += pv.cols();
  }
  std::vector<Var> ps = parts;
  return push(std::move(y), [ps](Tape& t, const Tensor& g) {
    int64_t off2 = 0;
    for (Var p : ps) {
      Tensor& gp = t.grad_buf(p.id);
      for (int64_t i = 0; i < gp.rows(); ++i)
        for (int64_t j = 0; j < gp.cols(); ++j) gp.at2(i, j) += g.at2(i, off2 + j);
      off2 += gp.cols();
    }
  });
}

Var Tape::concat_rows(const std::vector<Var>& parts) {
  if (parts.empty()) fail("concat_rows: empty input");
  const int64_t n = val(parts[0]).cols();
  int64_t total = 0;
  for (Var p : parts) {
    if (val(p).cols() != n) fail("concat_rows: column mismatch");
    total += val(p).rows();
  }
  Tensor y({total, n});
  int64_t off = 0;
  for (Var p : parts) {
    const Tensor& pv = val(p);
    for (int64_t i = 0; i < pv.rows(); ++i)
      for (int64_t j = 0; j < n; ++j) y.at2(off + i, j) = pv.at2(i, j);
    off += pv.rows();
  }
  std::vector<Var> ps = parts;
  return push(std::move(y), [ps](Tape& t, const Tensor& g) {
    int64_t off2 = 0;
    for (Var p : ps) {
      Tensor& gp = t.grad_buf(p.id);
      for (int64_t i = 0; i < gp.rows(); ++i)
        for (int64_t j = 0; j < gp.cols(); ++j) gp.at2(i, j) += g.at2(off2 + i, j);
      off2 += gp.rows();
    }
  });
}

Var Tape::slice_rows(Var a, int64_t r0, int64_t r1) {
  const Tensor& av = val(a);
  if (r0 < 0 || r1 > av.rows() || r0 > r1)
    fail("slice_rows [" + std::to_string(r0) + "," + std::to_string(r1) + ") out of range for " +
         shape_str(av.shape()));
  const int64_t n = av.cols();
  Tensor y({r1 - r0, n});
  for (int64_t i = r0; i < r1; ++i)
    for (int64_t j = 0; j < n; ++j) y.at2(i - r0, j) = av.at2(i, j);
  return push(std::move(y), [a, r0, r1, n](Tape& t, const Tensor& g) {
    Tensor& ga = t.grad_buf(a.id);
    for (int64_t i = r0; i < r1; ++i)
      for (int64_t j = 0; j < n; ++j) ga.at2(i, j) += g.at2(i - r0, j);
  });
}

Var Tape::reshape(Var a, Shape shape) {
  Tensor y = val(a).reshaped(std::move(shape));
  return push(std::move(y), [a](Tape& t, const Tensor& g) {
    auto& ga = t.grad_buf(a.id).data();
    for (size_t i = 0; i < ga.size(); ++i) ga[i] += g.data()[i];
  });
}

Var Tape::mean_rows(Var a) {
  const Tensor& av = val(a);
  const int64_t m = av.rows(), n = av.cols();
  Tensor y({1, n});
  for (int64_t j = 0; j < n; ++j) {
    double s = 0.0;
    for (int64_t i = 0; i < m; ++i) s += av.at2(i, j);
    y.at2(0, j) = static_cast<float>(s / static_cast<double>(m));
  }
  return push(std::move(y), [a, m, n](Tape& t, const Tensor& g) {
    Tensor& ga = t.grad_buf(a.id);
    const float inv = 1.0f / static_cast<float>(m);
    for (int64_t i = 0; i < m; ++i)
      for (int64_t j = 0; j < n; ++j) ga.at2(i, j) += g.at2(0, j) * inv;
  });
}

Var Tape::mean_cols(Var a) {
  const Tensor& av = val(a);
  const int64_t m = av.rows(), n = av.cols();
  Tensor y({m, 1});
  for (int64_t i = 0; i < m; ++i) {
    double s = 0.0;
    for (int64_t j = 0; j < n; ++j) s += av.at2(i, j);
    y.at2(i, 0) = static_cast<float>(s / static_cast<double>(n));
  }
  return push(std::move(y), [a, m, n](Tape& t, const Tensor& g) {
    Tensor& ga = t.grad_buf(a.id);
    const float inv = 1.0f / static_cast<float>(n);
    for (int64_t i = 0; i < m; ++i)
      for (int64_t j = 0; j < n; ++j) ga.at2(i, j) += g.at2(i, 0) * inv;
  });
}

Var Tape::sum_all(Var a) {
  double s = 0.0;
  for (float v : val(a).data()) s += v;
  return push(Tensor({1}, {static_cast<float>(s)}), [a](Tape& t, const Tensor& g) {
    auto& ga = t.grad_buf(a.id).data();
    for (float& v : ga) v += g.at(0);
  });
}

Var Tape::rows_dot(Var a, Var b) {
  check_same_shape(val(a), val(b), "rows_dot");
  const Tensor& av = val(a);
  const Tensor& bv = val(b);
  const int64_t m = av.rows(), n = av.cols();
  Tensor y({m, 1});
  for (int64_t i = 0; i < m; ++i) {
    double s = 0.0;
    for (int64_t j = 0; j < n; ++j) s += static_cast<double>(av.at2(i, j)) * bv.at2(i, j);
    y.at2(i, 0) = static_cast<float>(s);
  }
  return push(std::move(y), [a, b, m, n](Tape& t, const Tensor& g) {
    const Tensor& av2 = t.val(a);
    const Tensor& bv2 = t.val(b);
    Tensor& ga = t.grad_buf(a.id);
    Tensor& gb = t.grad_buf(b.id);
    for (int64_t i = 0; i < m; ++i)
      for (int64_t j = 0; j < n; ++j) {
        ga.at2(i, j) += g.at2(i, 0) * bv2.at2(i, j);
        gb.at2(i, j) += g.at2(i, 0) * av2.at2(i, j);
      }
  });
}

Var Tape::add_col_broadcast(Var m, Var c) {
  const Tensor& mv = val(m);
  const Tensor& cv = val(c);
  if (cv.numel() != mv.rows()) fail("add_col_broadcast: need one entry per row");
  Tensor y = mv;
  for (int64_t i = 0; i < mv.rows(); ++i)
    for (int64_t j = 0; j < mv.cols(); ++j) y.at2(i, j) += cv.at(i);
  return push(std::move(y), [m, c](Tape& t, const Tensor& g) {
    Tensor& gm = t.grad_buf(m.id);
    Tensor& gc = t.grad_buf(c.id);
    for (int64_t i = 0; i < gm.rows(); ++i) {
      double s = 0.0;
      for (int64_t j = 0; j < gm.cols(); ++j) {
        gm.at2(i, j) += g.at2(i, j);
        s += g.at2(i, j);
      }
      gc.at(i) += static_cast<float>(s);
    }
  });
}

Var Tape::add_row_broadcast(Var m, Var r) {
  const Tensor& mv = val(m);
  const Tensor& rv = val(r);
  if (rv.numel() != mv.cols()) fail("add_row_broadcast: need one entry per column");
  Tensor y = mv;
  for (int64_t i = 0; i < mv.rows(); ++i)
    for (int64_t j = 0; j < mv.cols(); ++j) y.at2(i, j) += rv.at(j);
  return push(std::move(y), [m, r](Tape& t, const Tensor& g) {
    Tensor& gm = t.grad_buf(m.id);
    Tensor& gr = t.grad_buf(r.id);
    for (int64_t j = 0; j < gm.cols(); ++j) {
      double s = 0.0;
      for (int64_t i = 0; i < gm.rows(); ++i) {
        gm.at2(i, j) += g.at2(i, j);
        s += g.at2(i, j);
      }
      gr.at(j) += static_cast<float>(s);
    }
  });
}

Var Tape::matinv(Var a) {
  Tensor y = mat_inverse(val(a));
  Tensor yc = y;
  return push(std::move(y), [a, yc](Tape& t, const Tensor& g) {
    // d(A^-1) rule: dA = -Y^T g Y^T
    Tensor yt = smast::transpose(yc);
    Tensor da = smast::matmul(smast::matmul(yt, g), yt);
    auto& ga = t.grad_buf(a.id).data();
    for (size_t i = 0; i < ga.size(); ++i) ga[i] -= da.data()[i];
  });
}

Var Tape::log_floor(Var a, double floor) {
  Tensor y = val(a);
  for (float& v : y.data())
    v = std::log(std::max(static_cast<double>(v), floor));
  return push(std::move(y), [a, floor](Tape& t, const Tensor& g) {
    const auto& av = t.val(a).data();
    auto& ga = t.grad_buf(a.id).data();
    for (size_t i = 0; i < ga.size(); ++i)
      if (static_cast<double>(av[i]) > floor) ga[i] += g.data()[i] / av[i];
  });
}

Var Tape::sin_cos_encode(Var pos, int64_t channels, double psi) {
  if (channels % 2 != 0) fail("sin_cos_encode: channel count must be even");
  const Tensor& pv = val(pos);
  const int64_t m = pv.numel();
  const int64_t half = channels / 2;
  Tensor y({m, channels});
  for (int64_t i = 0; i < m; ++i) {
    const double p = pv.at(i);
    for (int64_t nidx = 0; nidx < half; ++nidx) {
      double freq = std::pow(psi, -2.0 * static_cast<double>(nidx) / static_cast<double>(channels));
      double arg = p * freq;
      y.at2(i, 2 * nidx) = static_cast<float>(std::sin(arg));
      y.at2(i, 2 * nidx + 1) = static_cast<float>(std::cos(arg));
    }
  }
  return push(std::move(y), [pos, channels, psi, m, half](Tape& t, const Tensor& g) {
    const Tensor& pv2 = t.val(pos);
    Tensor& gp = t.grad_buf(pos.id);
    for (int64_t i = 0; i < m; ++i) {
      const double p = pv2.at(i);
      double acc = 0.0;
      for (int64_t nidx = 0; nidx < half; ++nidx) {
        double freq =
            std::pow(psi, -2.0 * static_cast<double>(nidx) / static_cast<double>(channels));
        double arg = p * freq;
        acc += freq * (std::cos(arg) * g.at2(i, 2 * nidx) - std::sin(arg) * g.at2(i, 2 * nidx + 1));
      }
      gp.at(i) += static_cast<float>(acc);
    }
  });
}

Var Tape::pairwise_sq_mahalanobis(Var q, Var k, Var s) {
  const Tensor& qv = val(q);
  const Tensor& kv = val(k);
  const Tensor& sv = val(s);
  const int64_t mq = qv.rows(), mk = kv.rows(), d = qv.cols();
  if (kv.cols() != d || sv.rows() != d || sv.cols() != d)
    fail("pairwise_sq_mahalanobis shape mismatch: " + shape_str(qv.shape()) + ", " +
         shape_str(kv.shape()) + ", " + shape_str(sv.shape()));
  Tensor y({mq, mk});
  std::vector<double> diff(static_cast<size_t>(d));
  for (int64_t i = 0; i < mq; ++i)
    for (int64_t j = 0; j < mk; ++j) {
      for (int64_t a = 0; a < d; ++a)
        diff[static_cast<size_t>(a)] =
            static_cast<double>(qv.at2(i, a)) - static_cast<double>(kv.at2(j, a));
      double acc = 0.0;
      for (int64_t a = 0; a < d; ++a) {
        double row = 0.0;
        for (int64_t b = 0; b < d; ++b) row += sv.at2(a, b) * diff[static_cast<size_t>(b)];
        acc += diff[static_cast<size_t>(a)] * row;
      }
      y.at2(i, j) = static_cast<float>(acc);
    }
  return push(std::move(y), [q, k, s, mq, mk, d](Tape& t, const Tensor& g) {
    const Tensor& qv2 = t.val(q);
    const Tensor& kv2 = t.val(k);
    const Tensor& sv2 = t.val(s);
    Tensor& gq = t.grad_buf(q.id);
    Tensor& gk = t.grad_buf(k.id);
    Tensor& gs = t.grad_buf(s.id);
    std::vector<double> diff(static_cast<size_t>(d)), w(static_cast<size_t>(d));
    for (int64_t i = 0; i < mq; ++i)
      for (int64_t j = 0; j < mk; ++j) {
        const double gv = g.at2(i, j);
        if (gv == 0.0) continue;
        for (int64_t a = 0; a < d; ++a)
          diff[static_cast<size_t>(a)] =
              static_cast<double>(qv2.at2(i, a)) - static_cast<double>(kv2.at2(j, a));
        // w = (S + S^T) diff
        for (int64_t a = 0; a < d; ++a) {
          double acc = 0.0;
          for (int64_t b = 0; b < d; ++b)
            acc += (static_cast<double>(sv2.at2(a, b)) + sv2.at2(b, a)) *
                   diff[static_cast<size_t>(b)];
          w[static_cast<size_t>(a)] = acc;
        }
        for (int64_t a = 0; a < d; ++a) {
          gq.at2(i, a) += static_cast<float>(gv * w[static_cast<size_t>(a)]);
          gk.at2(j, a) -= static_cast<float>(gv * w[static_cast<size_t>(a)]);
        }
        for (int64_t a = 0; a < d; ++a)
          for (int64_t b = 0; b < d; ++b)
            gs.at2(a, b) += static_cast<float>(gv * diff[static_cast<size_t>(a)] *
                                               diff[static_cast<size_t>(b)]);
      }
  });
}

Var Tape::ridge_regularize(Var s, double c) {
  const Tensor& sv = val(s);
  const int64_t n = sv.rows();
  if (sv.cols() != n) fail("ridge_regularize expects a square matrix");
  double tr = 0.0;
  for (int64_t i = 0; i < n; ++i) tr += sv.at2(i, i);
  const double eps = c * tr / static_cast<double>(n);
  Tensor y = sv;
  for (int64_t i = 0; i < n; ++i) y.at2(i, i) = static_cast<float>(y.at2(i, i) + eps);
  return push(std::move(y), [s, c, n](Tape& t, const Tensor& g) {
    Tensor& gs = t.grad_buf(s.id);
    double trg = 0.0;
    for (int64_t i = 0; i < n; ++i) trg += g.at2(i, i);
    const double extra = c * trg / static_cast<double>(n);
    for (int64_t i = 0; i < n; ++i)
      for (int64_t j = 0; j < n; ++j)
        gs.at2(i, j) += static_cast<float>(g.at2(i, j) + (i == j ? extra : 0.0));
  });
}

void Tape::backward(Var loss) {
  if (nodes_.empty() || !loss.valid()) return;
  if (val(loss).numel() != 1)
    fail("backward expects a scalar loss, got " + shape_str(val(loss).shape()));
  grads_.assign(nodes_.size(), Tensor());
  grad_set_.assign(nodes_.size(), 0);
  grad_buf(loss.id).at(0) = 1.0f;
  for (int32_t i = loss.id; i >= 0; --i) {
    if (grad_set_[static_cast<size_t>(i)] == 0) continue;
    auto& node = nodes_[static_cast<size_t>(i)];
    if (node.back) node.back(*this, grads_[static_cast<size_t>(i)]);
  }
  grads_.clear();
  grad_set_.clear();
}

Tensor mat_inverse(const Tensor& a) {
  const int64_t n = a.rows();
  if (a.ndim() != 2 || a.cols() != n)
    fail("mat_inverse expects a square matrix, got " + shape_str(a.shape()));
  std::vector<double> aug(static_cast<size_t>(n * 2 * n), 0.0);
  auto at = [&](int64_t i, int64_t j) -> double& { return aug[static_cast<size_t>(i * 2 * n + j)]; };
  for (int64_t i = 0; i < n; ++i) {
    for (int64_t j = 0; j < n; ++j) at(i, j) = a.at2(i, j);
    at(i, n + i) = 1.0;
  }
  for (int64_t col = 0; col < n; ++col) {
    int64_t piv = col;
    for (int64_t i = col + 1; i < n; ++i)
      if (std::fabs(at(i, col)) > std::fabs(at(piv, col))) piv = i;
    if (std::fabs(at(piv, col)) < 1e-300) fail("mat_inverse: singular matrix");
    if (piv != col)
      for (int64_t j = 0; j < 2 * n; ++j) std::swap(at(piv, j), at(col, j));
    const double d = at(col, col);
    for (int64_t j = 0; j < 2 * n; ++j) at(col, j) /= d;
    for (int64_t i = 0; i < n; ++i) {
      if (i == col) continue;
      const double f = at(i, col);
      if (f == 0.0) continue;
      for (int64_t j = 0; j < 2 * n; ++j) at(i, j) -= f * at(col, j);
    }
  }
  Tensor inv({n, n});
  for (int64_t i = 0; i < n; ++i)
    for (int64_t j = 0; j < n; ++j) inv.at2(i, j) = static_cast<float>(at(i, n + j));
  return inv;
}

}  // namespace smast
