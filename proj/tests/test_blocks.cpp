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

#include <algorithm>
#include <cmath>

#include "nn/blocks.hpp"
#include "support.hpp"

using namespace morphnet;
using namespace morphnet::nn;
using ad::Shape;
using morphnet::testing::code_of;

namespace {

template <typename T = double>
Tensor<T> rnd(Shape s, Rng& rng, double lo = -1, double hi = 1) {
  Tensor<T> t(std::move(s));
  for (auto& v : t.data()) v = static_cast<T>(rng.uniform(lo, hi));
  return t;
}

template <typename T>
void randomize(const std::vector<Parameter<T>*>& ps, Rng& rng) {
  for (auto* p : ps)
    for (auto& v : p->value.data()) v = static_cast<T>(rng.uniform(-0.5, 0.5));
}

std::size_t count(const std::vector<Parameter<double>*>& ps) {
  std::size_t n = 0;
  for (auto* p : ps) n += p->value.size();
  return n;
}

}  // namespace

TEST_CASE("squeeze is the spatial mean") {
  Tape<double> t;
  Tensor<double> u({1, 2, 2, 2});
  for (std::size_t i = 0; i < 4; ++i) {
    u[i * 2] = 3;
    u[i * 2 + 1] = -1;
  }
  const auto z = t.value(se_squeeze(t, t.constant(u)));
  CHECK(z[0] == 3.0);
  CHECK(z[1] == -1.0);
  CHECK(t.value(se_squeeze(t, t.constant(Tensor<double>({1, 2, 2, 1}, {1, 2, 3, 4}))))[0] == 2.5);

  Rng rng(1);
  const auto r = rnd({2, 3, 4, 5}, rng);
  const auto g = t.value(se_squeeze(t, t.constant(r)));
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t c = 0; c < 5; ++c) {
      double s = 0;
      for (std::size_t p = 0; p < 12; ++p) s += r[(n * 12 + p) * 5 + c];
      CHECK(g[n * 5 + c] == doctest::Approx(s / 12).epsilon(1e-14));
    }
}

TEST_CASE("excitation") {
  Rng rng(2);
  SEConfig cfg = SEConfig::with_reduction(16);
  CHECK(cfg.bottleneck == 4);
  CHECK(cfg.parameter_count() == 16 * 4 + 4 + 4 * 16 + 16);
  CHECK(cfg.parameter_count() == 148);

  auto p = SEParams<double>::init(cfg, rng, "se");
  CHECK(count(p.parameters()) == 148);
  for (auto* q : p.parameters()) q->value.fill(0.0);
  Tape<double> t;
  const auto s = t.value(se_excite(t, t.constant(rnd({3, 16}, rng)), cfg, p));
  for (double v : s.data()) CHECK(v == 0.5);

  SEParams<double> bad = SEParams<double>::init(cfg, rng, "se");
  bad.w1.value = Tensor<double>({16, 5});
  CHECK(code_of([&] { se_excite(t, t.constant(rnd({1, 16}, rng)), cfg, bad); }) == ErrorCode::kShape);
}

TEST_CASE("fc and pointwise excitation agree") {
  Rng rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t d = 1 + rng.below(24);
    SEConfig fc = SEConfig::with_reduction(d);
    SEConfig pw = fc;
    pw.variant = SEVariant::kPointwise;
    auto p = SEParams<double>::init(fc, rng, "se");
    randomize(p.parameters(), rng);
    Tape<double> t;
    const Var z = t.constant(rnd({2, d}, rng, -2, 2));
    const auto a = t.value(se_excite(t, z, fc, p));
    const auto b = t.value(se_excite(t, z, pw, p));
    REQUIRE(a.size() == b.size());
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(std::abs(a[i] - b[i]) <= 1e-6 * std::max(1.0, std::abs(a[i])));
      CHECK(a[i] > 0.0);
      CHECK(a[i] < 1.0);
    }
  }
}

TEST_CASE("sigmoid-gated SE never amplifies") {
  Rng rng(4);
  SEConfig cfg = SEConfig::with_reduction(8);
  auto p = SEParams<double>::init(cfg, rng, "se");
  randomize(p.parameters(), rng);
  Tape<double> t;
  const auto u = rnd({2, 4, 4, 8}, rng, -3, 3);
  const auto y = t.value(se_forward(t, t.constant(u), cfg, p));
  double in_max = 0, out_max = 0;
  for (double v : u.data()) in_max = std::max(in_max, std::abs(v));
  for (double v : y.data()) out_max = std::max(out_max, std::abs(v));
  CHECK(out_max <= in_max);
}

TEST_CASE("channel rescale") {
  Rng rng(5);
  Tape<double> t;
  const auto u = rnd({2, 3, 3, 4}, rng);
  CHECK(t.value(se_scale(t, t.constant(u), t.constant(Tensor<double>({2, 4}, 1.0)))) == u);
  for (double v : t.value(se_scale(t, t.constant(u), t.constant(Tensor<double>({2, 4})))).data()) CHECK(v == 0.0);
  const auto s = rnd({2, 4}, rng);
  const auto y = t.value(se_scale(t, t.constant(u), t.constant(s)));
  for (std::size_t n = 0; n < 2; ++n)
    for (std::size_t p = 0; p < 9; ++p)
      for (std::size_t c = 0; c < 4; ++c) {
        const std::size_t i = (n * 9 + p) * 4 + c;
        CHECK(y[i] == u[i] * s[n * 4 + c]);
      }
  CHECK(code_of([&] { se_scale(t, t.constant(u), t.constant(Tensor<double>({2, 3}))); }) == ErrorCode::kShape);
}

TEST_CASE("residual unit") {
  Rng rng(6);
  ResidualConfig cfg{3, 3};
  auto p = ResidualParams<double>::init(cfg, rng, "res");
  for (auto* q : p.parameters()) q->value.fill(0.0);
  const auto a = rnd({1, 4, 4, 3}, rng);
  Tape<double> t;
  const auto y = t.value(residual_forward(t, t.constant(a), cfg, p));
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(y[i] == std::max(0.0, a[i]));

  const auto pos = rnd({1, 4, 4, 3}, rng, 0.1, 1);
  {
    Tape<double> g;
    const Var x = g.input(pos);
    const Var out = residual_forward(g, x, cfg, p);
    CHECK(g.value(out) == pos);
    g.backward(ad::sum(g, out));
    for (double v : g.grad(x).data()) CHECK(v == 1.0);
  }

  randomize(p.parameters(), rng);
  Tape<double> r;
  const Var x = r.constant(a);
  const Var inner = ad::conv2d(r, ad::relu(r, ad::conv2d(r, x, r.constant(p.w1.value), r.constant(p.b1.value), 1,
                                                         ad::Padding::kSame)),
                               r.constant(p.w2.value), r.constant(p.b2.value), 1, ad::Padding::kSame);
  const auto want = r.value(ad::relu(r, ad::add(r, x, inner)));
  CHECK(r.value(residual_forward(r, x, cfg, p)) == want);

  CHECK(code_of([&] { residual_forward(r, r.constant(rnd({1, 4, 4, 2}, rng)), cfg, p); }) == ErrorCode::kShape);
}

TEST_CASE("MBConv skip rule and shapes") {
  Rng rng(7);
  MBConvConfig cfg;
  cfg.in_channels = 4;
  cfg.out_channels = 4;
  cfg.expansion = 1;
  cfg.gate = GateActivation::kRelu;
  auto p = MBConvParams<double>::init(cfg, rng, "mb");
  CHECK_FALSE(p.has_expand);
  // Unit depthwise tap, gate pinned to 1, identity projection.
  p.depthwise_w.value.fill(0.0);
  for (std::size_t c = 0; c < 4; ++c) p.depthwise_w.value[(1 * 3 + 1) * 4 + c] = 1.0;
  p.depthwise_b.value.fill(0.0);
  p.se.w1.value.fill(0.0);
  p.se.w2.value.fill(0.0);
  p.se.b2.value.fill(1.0);
  p.project_w.value.fill(0.0);
  for (std::size_t c = 0; c < 4; ++c) p.project_w.value[c * 4 + c] = 1.0;
  p.project_b.value.fill(0.0);
  const auto x = rnd({1, 5, 5, 4}, rng);
  Tape<double> t;
  const auto y = t.value(mbconv_forward(t, t.constant(x), cfg, p));
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(y[i] == x[i] + std::max(0.0, x[i]));

  MBConvConfig e6 = cfg;
  e6.expansion = 6;
  e6.gate = GateActivation::kSigmoid;
  auto q = MBConvParams<double>::init(e6, rng, "mb");
  const auto in = t.value(mbconv_inner(t, t.constant(x), e6, q));
  const auto out = t.value(mbconv_forward(t, t.constant(x), e6, q));
  for (std::size_t i = 0; i < x.size(); ++i) CHECK(out[i] == in[i] + x[i]);

  MBConvConfig s2 = e6;
  s2.stride = 2;
  CHECK_FALSE(s2.has_skip());
  auto r = MBConvParams<double>::init(s2, rng, "mb");
  const auto half = t.value(mbconv_forward(t, t.constant(x), s2, r));
  CHECK(half.shape() == Shape{1, 3, 3, 4});
  CHECK(half == t.value(mbconv_inner(t, t.constant(x), s2, r)));

  MBConvConfig wide = e6;
  wide.out_channels = 8;
  CHECK_FALSE(wide.has_skip());
}

TEST_CASE("MBConv parameter count") {
  MBConvConfig cfg;
  cfg.in_channels = 16;
  cfg.out_channels = 16;
  cfg.kernel = 3;
  cfg.expansion = 6;
  cfg.se_ratio = 0.25;
  // expand 16x96+96, depthwise 3x3x96+96, SE 96x4+4+4x96+96, project 96x16+16
  const std::size_t hand = (16 * 96 + 96) + (9 * 96 + 96) + (96 * 4 + 4 + 4 * 96 + 96) + (96 * 16 + 16);
  CHECK(cfg.se_config().bottleneck == 4);
  CHECK(cfg.parameter_count() == hand);
  Rng rng(8);
  auto p = MBConvParams<double>::init(cfg, rng, "mb");
  CHECK(count(p.parameters()) == hand);
}

TEST_CASE("head outputs") {
  Rng rng(9);
  HeadConfig cls;
  auto p = HeadParams<double>::init(8, cls, rng, "head");
  const auto f = rnd({3, 4, 4, 8}, rng);
  Tape<double> t;
  const auto y = t.value(head_forward(t, t.constant(f), cls, p, true, rng));
  REQUIRE(y.shape() == Shape{3, 7});
  for (std::size_t n = 0; n < 3; ++n) {
    double s = 0;
    for (std::size_t k = 0; k < 7; ++k) s += y[n * 7 + k];
    CHECK(s == doctest::Approx(1.0).epsilon(1e-12));
  }
  Rng a(1), b(2);
  const Tensor<double> first = t.value(head_forward(t, t.constant(f), cls, p, false, a));
  CHECK(first == t.value(head_forward(t, t.constant(f), cls, p, false, b)));

  HeadConfig reg;
  reg.mode = HeadMode::kRegress;
  auto q = HeadParams<double>::init(8, reg, rng, "head");
  const auto z = t.value(head_forward(t, t.constant(f), reg, q, false, rng));
  REQUIRE(z.shape() == Shape{3, 37});
  for (double v : z.data()) {
    CHECK(v > 0.0);
    CHECK(v < 1.0);
  }
  CHECK(code_of([&] { head_forward(t, t.constant(rnd({1, 2, 2, 4}, rng)), cls, p, false, rng); }) ==
        ErrorCode::kShape);
}
