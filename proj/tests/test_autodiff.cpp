// Copyright 2026 The MorphNet Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <doctest.h>

#include <cmath>
#include <vector>

#include "autodiff/gradcheck.hpp"
#include "autodiff/ops.hpp"
#include "check/gradsuite.hpp"
#include "support.hpp"

using namespace morphnet;
using namespace morphnet::ad;
using morphnet::testing::code_of;

namespace {

template <typename T = float>
Tensor<T> random_tensor(Shape s, Rng& rng, double lo = -1, double hi = 1) {
  Tensor<T> t(std::move(s));
  for (auto& v : t.data()) v = static_cast<T>(rng.uniform(lo, hi));
  return t;
}

// Direct-summation cross-correlation with TF "same" / valid padding.
std::vector<double> naive_conv(const Tensor<double>& x, const Tensor<double>& k, std::size_t stride,
                               bool same, std::size_t& oh, std::size_t& ow) {
  const std::size_t n = x.dim(0), h = x.dim(1), w = x.dim(2), ci = x.dim(3);
  const std::size_t kk = k.dim(0), co = k.dim(3);
  long pt = 0, pl = 0;
  if (same) {
    oh = (h + stride - 1) / stride;
    ow = (w + stride - 1) / stride;
    pt = std::max<long>(0, static_cast<long>((oh - 1) * stride + kk) - static_cast<long>(h)) / 2;
    pl = std::max<long>(0, static_cast<long>((ow - 1) * stride + kk) - static_cast<long>(w)) / 2;
  } else {
    oh = (h - kk) / stride + 1;
    ow = (w - kk) / stride + 1;
  }
  std::vector<double> out(n * oh * ow * co, 0.0);
  for (std::size_t b = 0; b < n; ++b)
    for (std::size_t i = 0; i < oh; ++i)
      for (std::size_t j = 0; j < ow; ++j)
        for (std::size_t o = 0; o < co; ++o) {
          double acc = 0;
          for (std::size_t di = 0; di < kk; ++di)
            for (std::size_t dj = 0; dj < kk; ++dj) {
              const long r = static_cast<long>(i * stride + di) - pt;
              const long c = static_cast<long>(j * stride + dj) - pl;
              if (r < 0 || c < 0 || r >= static_cast<long>(h) || c >= static_cast<long>(w)) continue;
              for (std::size_t q = 0; q < ci; ++q) {
                acc += x[((b * h + r) * w + c) * ci + q] * k[((di * kk + dj) * ci + q) * co + o];
              }
            }
          out[((b * oh + i) * ow + j) * co + o] = acc;
        }
  return out;
}

}  // namespace

TEST_CASE("he_init matches the target spread") {
  Rng rng(11);
  const auto a = he_init<double>({1000000}, 2, rng);
  double m = 0, v = 0;
  for (double x : a.data()) m += x;
  m /= 1e6;
  for (double x : a.data()) v += (x - m) * (x - m);
  v /= 1e6;
  CHECK(std::abs(v - 1.0) < 0.02);

  const auto b = he_init<double>({1000000}, 8, rng);
  double s2 = 0;
  for (double x : b.data()) s2 += x * x;
  CHECK(std::abs(std::sqrt(s2 / 1e6) - 0.5) < 0.005);

  const auto one = he_init<float>({1}, 5, rng);
  CHECK(std::isfinite(one[0]));
  CHECK(code_of([&] { he_init<float>({3}, 0, rng); }) == ErrorCode::kInvalidArgument);
  CHECK(code_of([&] { Tensor<float> t({2, 0}); }) == ErrorCode::kShape);
}

TEST_CASE("dense follows the weighted sum") {
  Tape<float> t;
  const Var x = t.constant(Tensor<float>({2}, {1, 2}));
  const Var w = t.constant(Tensor<float>({2, 2}, {1, 1, 1, -1}));
  const Var b = t.constant(Tensor<float>({2}, {0, 1}));
  const auto y = t.value(dense(t, x, w, b, Activation::kRelu));
  CHECK(y[0] == 3.0f);
  CHECK(y[1] == 0.0f);

  const Var id = t.constant(Tensor<float>({2, 2}, {1, 0, 0, 1}));
  const Var zb = t.constant(Tensor<float>({2}));
  const auto same = t.value(dense(t, x, id, zb));
  CHECK(same[0] == 1.0f);
  CHECK(same[1] == 2.0f);

  const auto z = t.value(dense(t, t.constant(Tensor<float>({2})), w, zb, Activation::kRelu));
  CHECK(z[0] == 0.0f);
  CHECK(z[1] == 0.0f);

  const Var bad = t.constant(Tensor<float>({3, 2}));
  CHECK(code_of([&] { dense(t, x, bad, b); }) == ErrorCode::kShape);
}

TEST_CASE("conv2d against direct summation") {
  Tape<double> t;
  const Var ones = t.constant(Tensor<double>({1, 3, 3, 1}, 1.0));
  const Var k9 = t.constant(Tensor<double>({3, 3, 1, 1}, 1.0));
  const auto nine = t.value(conv2d(t, ones, k9, std::nullopt, 1, Padding::kValid));
  CHECK(nine.shape() == Shape{1, 1, 1, 1});
  CHECK(nine[0] == 9.0);

  Rng rng(3);
  const Tensor<double> x = random_tensor<double>({2, 5, 6, 3}, rng);
  Tensor<double> eye({1, 1, 3, 3});
  for (std::size_t i = 0; i < 3; ++i) eye[i * 3 + i] = 1.0;
  CHECK(t.value(conv2d(t, t.constant(x), t.constant(eye), std::nullopt, 1, Padding::kSame)) == x);

  const auto c = t.value(conv2d(t, t.constant(x), t.constant(Tensor<double>({3, 3, 3, 2})),
                                 t.constant(Tensor<double>({2}, 0.75)), 1, Padding::kSame));
  for (double v : c.data()) CHECK(v == 0.75);

  for (std::size_t k : {1, 3, 5}) {
    for (std::size_t stride : {1, 2, 3}) {
      for (bool same : {true, false}) {
        const Tensor<double> in = random_tensor<double>({1, 7, 6, 2}, rng);
        const Tensor<double> ker = random_tensor<double>({k, k, 2, 3}, rng);
        std::size_t oh = 0, ow = 0;
        const auto want = naive_conv(in, ker, stride, same, oh, ow);
        const auto got = t.value(conv2d(t, t.constant(in), t.constant(ker), std::nullopt, stride,
                                         same ? Padding::kSame : Padding::kValid));
        REQUIRE(got.shape() == Shape{1, oh, ow, 3});
        for (std::size_t i = 0; i < want.size(); ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));
      }
    }
  }
  const Var small = t.constant(Tensor<double>({1, 2, 2, 1}, 1.0));
  CHECK(code_of([&] { conv2d(t, small, k9, std::nullopt, 1, Padding::kValid); }) == ErrorCode::kShape);
  CHECK(code_of([&] {
          conv2d(t, small, t.constant(Tensor<double>({2, 2, 1, 1})), std::nullopt, 1, Padding::kSame);
        }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("conv output extents follow the closed forms") {
  for (std::size_t k : {1, 3, 5}) {
    for (std::size_t h = k; h <= 10; ++h) {
      for (std::size_t s = 1; s <= 3; ++s) {
        CHECK(conv_output_extent(h, k, s, Padding::kValid) == (h - k) / s + 1);
        CHECK(conv_output_extent(h, k, s, Padding::kSame) == (h + s - 1) / s);
      }
      Tape<float> t;
      const auto y = t.value(conv2d(t, t.constant(Tensor<float>({1, h, h, 2}, 1.f)),
                                     t.constant(Tensor<float>({k, k, 2, 1}, 1.f)), std::nullopt, 1,
                                     Padding::kSame));
      CHECK(y.shape() == Shape{1, h, h, 1});
    }
  }
}

TEST_CASE("depthwise conv is per-channel conv2d") {
  Rng rng(5);
  Tape<double> t;
  const Tensor<double> x = random_tensor<double>({1, 5, 5, 2}, rng);
  CHECK(t.value(depthwise_conv2d(t, t.constant(x), t.constant(Tensor<double>({1, 1, 2}, 1.0)), std::nullopt, 1,
                                 Padding::kSame)) == x);

  Tensor<double> half({3, 3, 2});
  half[(1 * 3 + 1) * 2 + 1] = 1.0;  // channel 1 centre tap, channel 0 zero
  const auto y = t.value(depthwise_conv2d(t, t.constant(x), t.constant(half), std::nullopt, 1, Padding::kSame));
  for (std::size_t i = 0; i < 25; ++i) {
    CHECK(y[i * 2] == 0.0);
    CHECK(y[i * 2 + 1] == x[i * 2 + 1]);
  }

  for (std::size_t stride : {1, 2}) {
    const Tensor<double> k = random_tensor<double>({3, 3, 2}, rng);
    const auto dw = t.value(depthwise_conv2d(t, t.constant(x), t.constant(k), std::nullopt, stride, Padding::kSame));
    for (std::size_t c = 0; c < 2; ++c) {
      Tensor<double> xc({1, 5, 5, 1}), kc({3, 3, 1, 1});
      for (std::size_t i = 0; i < 25; ++i) xc[i] = x[i * 2 + c];
      for (std::size_t i = 0; i < 9; ++i) kc[i] = k[i * 2 + c];
      const auto ref = t.value(conv2d(t, t.constant(xc), t.constant(kc), std::nullopt, stride, Padding::kSame));
      for (std::size_t i = 0; i < ref.size(); ++i) CHECK(dw[i * 2 + c] == doctest::Approx(ref[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("pointwise conv is a per-pixel dense layer") {
  Rng rng(6);
  Tape<double> t;
  const Tensor<double> x = random_tensor<double>({1, 4, 4, 3}, rng);
  const Tensor<double> w = random_tensor<double>({3, 5}, rng);
  const auto y = t.value(pointwise_conv(t, t.constant(x), t.constant(w.reshaped({1, 1, 3, 5})), std::nullopt));
  const Var wv = t.constant(w);
  const Var zb = t.constant(Tensor<double>({5}));
  for (std::size_t p = 0; p < 16; ++p) {
    Tensor<double> px({3}, {x[p * 3], x[p * 3 + 1], x[p * 3 + 2]});
    const auto d = t.value(dense(t, t.constant(px), wv, zb));
    for (std::size_t o = 0; o < 5; ++o) CHECK(y[p * 5 + o] == doctest::Approx(d[o]).epsilon(1e-12));
  }
  const auto s = t.value(pointwise_conv(t, t.constant(x), t.constant(Tensor<double>({1, 1, 3, 1}, 1.0)), std::nullopt));
  for (std::size_t p = 0; p < 16; ++p) CHECK(s[p] == doctest::Approx(x[p * 3] + x[p * 3 + 1] + x[p * 3 + 2]));
}

TEST_CASE("global average pool") {
  Tape<double> t;
  const auto c = t.value(global_avg_pool(t, t.constant(Tensor<double>({1, 3, 2, 1}, 4.25))));
  CHECK(c[0] == 4.25);
  const auto m = t.value(global_avg_pool(t, t.constant(Tensor<double>({1, 2, 2, 1}, {1, 2, 3, 4}))));
  CHECK(m[0] == 2.5);

  Rng rng(7);
  const Tensor<double> x = random_tensor<double>({1, 7, 5, 3}, rng);
  const auto g = t.value(global_avg_pool(t, t.constant(x)));
  CHECK(g.shape() == Shape{1, 3});
  for (std::size_t c2 = 0; c2 < 3; ++c2) {
    double s = 0;
    for (std::size_t i = 0; i < 35; ++i) s += x[i * 3 + c2];
    CHECK(g[c2] == doctest::Approx(s / 35).epsilon(1e-14));
  }
}

TEST_CASE("max pool and tie routing") {
  Tape<double> t;
  const auto f = t.value(max_pool(t, t.constant(Tensor<double>({1, 2, 2, 1}, {1, 2, 3, 4})), 2, 2));
  CHECK(f[0] == 4.0);
  const auto c = t.value(max_pool(t, t.constant(Tensor<double>({1, 4, 4, 2}, 1.5)), 2, 2));
  for (double v : c.data()) CHECK(v == 1.5);

  Rng rng(8);
  const Tensor<double> x = random_tensor<double>({1, 6, 5, 2}, rng);
  const auto y = t.value(max_pool(t, t.constant(x), 3, 2));
  REQUIRE(y.shape() == Shape{1, 2, 2, 2});
  for (std::size_t i = 0; i < 2; ++i)
    for (std::size_t j = 0; j < 2; ++j)
      for (std::size_t ch = 0; ch < 2; ++ch) {
        double best = -1e9;
        for (std::size_t a = 0; a < 3; ++a)
          for (std::size_t b = 0; b < 3; ++b) best = std::max(best, x[((i * 2 + a) * 5 + j * 2 + b) * 2 + ch]);
        CHECK(y[(i * 2 + j) * 2 + ch] == best);
      }

  Tape<double> g;
  const Var tie = g.input(Tensor<double>({1, 2, 2, 1}, 2.0));
  g.backward(sum(g, max_pool(g, tie, 2, 2)));
  CHECK(g.grad(tie)[0] == 1.0);
  CHECK(g.grad(tie)[1] == 0.0);
  CHECK(g.grad(tie)[3] == 0.0);
  CHECK(code_of([&] { max_pool(t, t.constant(Tensor<double>({1, 2, 2, 1})), 3, 1); }) == ErrorCode::kShape);
}

TEST_CASE("activations") {
  Tape<double> t;
  const auto u = t.value(softmax(t, t.constant(Tensor<double>({4}, 0.3))));
  for (double v : u.data()) CHECK(v == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(t.value(sigmoid(t, t.constant(Tensor<double>({1}, 0.0))))[0] == 0.5);
  const auto big = t.value(softmax(t, t.constant(Tensor<double>({2}, {1000.0, 0.0}))));
  CHECK(std::isfinite(big[0]));
  CHECK(std::isfinite(big[1]));
  CHECK(big[0] == doctest::Approx(1.0));
  CHECK(big[1] == doctest::Approx(std::exp(-1000.0L)));
  const auto r = t.value(relu(t, t.constant(Tensor<double>({3}, {-1, 0, 2}))));
  CHECK(r[0] == 0.0);
  CHECK(r[2] == 2.0);

  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor<double> z = random_tensor<double>({3, 7}, rng, -30, 30);
    const auto p = t.value(softmax(t, t.constant(z)));
    for (std::size_t row = 0; row < 3; ++row) {
      long double want_den = 0;
      for (std::size_t k = 0; k < 7; ++k) want_den += std::exp(static_cast<long double>(z[row * 7 + k]));
      double s = 0;
      for (std::size_t k = 0; k < 7; ++k) {
        CHECK(p[row * 7 + k] > 0.0);
        CHECK(p[row * 7 + k] ==
              doctest::Approx(static_cast<double>(std::exp(static_cast<long double>(z[row * 7 + k])) / want_den))
                  .epsilon(1e-12));
        s += p[row * 7 + k];
      }
      CHECK(std::abs(s - 1.0) < 1e-6);
    }
  }
}

TEST_CASE("inverted dropout") {
  Rng rng(10);
  Tape<float> t;
  const Tensor<float> x = random_tensor({5, 4}, rng);
  CHECK(t.value(dropout(t, t.constant(x), 0.0, true, rng)) == x);
  CHECK(t.value(dropout(t, t.constant(x), 0.5, false, rng)) == x);
  const auto y = t.value(dropout(t, t.constant(Tensor<float>({1000000}, 1.0f)), 0.5, true, rng));
  double m = 0;
  bool two_levels = true;
  for (float v : y.data()) {
    two_levels = two_levels && (v == 0.0f || v == 2.0f);
    m += v;
  }
  CHECK(two_levels);
  m /= 1e6;
  CHECK(m >= 0.99);
  CHECK(m <= 1.01);
  CHECK(code_of([&] { dropout(t, t.constant(x), 1.0, true, rng); }) == ErrorCode::kInvalidArgument);
  CHECK(code_of([&] { dropout(t, t.constant(x), -0.1, true, rng); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("cross entropy") {
  Tape<double> t;
  const Var onehot = t.constant(Tensor<double>({3}, {0, 1, 0}));
  CHECK(t.value(cross_entropy(t, onehot, onehot))[0] == doctest::Approx(0.0));
  const auto half = t.value(cross_entropy(t, t.constant(Tensor<double>({2}, {0.5, 0.5})),
                                           t.constant(Tensor<double>({2}, {1, 0}))));
  CHECK(half[0] == doctest::Approx(0.6931471805599453).epsilon(1e-12));

  Rng rng(12);
  for (int trial = 0; trial < 20; ++trial) {
    Tensor<double> p = random_tensor<double>({4, 7}, rng, 0.01, 1.0), y = random_tensor<double>({4, 7}, rng, 0, 1);
    long double want = 0;
    for (std::size_t i = 0; i < p.size(); ++i) want -= y[i] * std::log(static_cast<long double>(p[i]));
    want /= 4;
    CHECK(std::abs(t.value(cross_entropy(t, t.constant(p), t.constant(y)))[0] - static_cast<double>(want)) < 1e-6);
  }
  CHECK(code_of([&] { cross_entropy(t, onehot, t.constant(Tensor<double>({2}))); }) == ErrorCode::kShape);
}

TEST_CASE("backward sweeps") {
  Rng rng(13);
  const Tensor<double> x = random_tensor<double>({3, 4}, rng);
  {
    Tape<double> t;
    const Var v = t.input(x);
    t.backward(sum(t, v));
    for (double g : t.grad(v).data()) CHECK(g == 1.0);
  }
  {
    Tape<double> t;
    const Var v = t.input(x);
    t.backward(sum(t, square(t, v)));
    for (std::size_t i = 0; i < x.size(); ++i) CHECK(t.grad(v)[i] == 2 * x[i]);
  }
  {
    Tape<double> t;
    const Var v = t.input(x);
    CHECK(code_of([&] { t.backward(v); }) == ErrorCode::kInvalidArgument);
  }
  // A parameter used twice on a linear loss receives twice the gradient.
  const Tensor<double> w = random_tensor<double>({3, 4}, rng);
  Parameter<double> p("p", x);
  {
    Tape<double> t;
    t.backward(weighted_sum(t, t.param(p), w));
  }
  const Tensor<double> once = p.grad;
  p.zero_grad();
  {
    Tape<double> t;
    const Var a = t.param(p);
    const Var b = t.param(p);
    t.backward(weighted_sum(t, add(t, a, b), w));
  }
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(p.grad[i] == 2 * once[i]);
}

TEST_CASE("float composite chain passes the 32-bit criterion") {
  Rng rng(14);
  Parameter<float> x("x", random_tensor({1, 5, 5, 2}, rng));
  Parameter<float> k("k", random_tensor({3, 3, 2, 3}, rng));
  Parameter<float> w("w", random_tensor({3, 4}, rng));
  Parameter<float> b("b", random_tensor({4}, rng));
  const Tensor<float> y({1, 4}, {0, 1, 0, 0});
  std::vector<Parameter<float>*> ps{&x, &k, &w, &b};
  const auto rep = grad_check<float>(ps, [&](Tape<float>& t) {
    const Var h = relu(t, conv2d(t, t.param(x), t.param(k), std::nullopt, 1, Padding::kSame));
    const Var p = dense(t, global_avg_pool(t, h), t.param(w), t.param(b), Activation::kSoftmax);
    return cross_entropy(t, p, t.constant(y));
  }, GradCheckOptions::for_float());
  CHECK(rep.checked > 0);
  CHECK(rep.max_rel_error < 1e-2);
}

TEST_CASE("grad_check flags a wrong backward rule") {
  Rng rng(15);
  Parameter<double> x("x", random_tensor<double>({4}, rng));
  std::vector<Parameter<double>*> ps{&x};
  const auto rep = grad_check<double>(ps, [&](Tape<double>& t) {
    const Var in = t.param(x);
    Tensor<double> v = t.value(in);
    for (auto& e : v.data()) e *= 2;
    const Var y = t.record(std::move(v), {in}, [](Tape<double>& tp, std::size_t self) {
      auto& g = tp.grad_ref(tp.input_id(self, 0));
      const auto& up = tp.upstream(self);
      for (std::size_t i = 0; i < g.size(); ++i) g[i] += 3 * up[i];
    });
    return sum(t, y);
  }, GradCheckOptions::for_double());
  CHECK(rep.max_rel_error > 0.1);
}

TEST_CASE("identical inputs give bit-identical outputs and gradients") {
  auto run = [] {
    Rng rng(16);
    Parameter<float> x("x", random_tensor({2, 6, 6, 3}, rng));
    Parameter<float> k("k", random_tensor({3, 3, 3}, rng));
    Tape<float> t;
    const Var y = depthwise_conv2d(t, t.param(x), t.param(k), std::nullopt, 2, Padding::kSame);
    const Var d = dropout(t, y, 0.5, true, rng);
    t.backward(sum(t, square(t, d)));
    return std::make_tuple(t.value(d), x.grad, k.grad);
  };
  CHECK(run() == run());
}

TEST_CASE("gradient suite on a few seeds") {
  check::GradSuiteOptions o;
  o.seeds = 3;
  const auto r = check::run_grad_suite(o);
  CHECK(r.passed);
  CHECK(r.cases.size() == check::grad_case_names().size());
  o.only = {"no-such-case"};
  CHECK(code_of([&] { check::run_grad_suite(o); }) == ErrorCode::kNotFound);
}
