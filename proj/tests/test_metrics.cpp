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

#include "metrics/featmap.hpp"
#include "metrics/metrics.hpp"
#include "scaling/network.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace morphnet;
using namespace morphnet::metrics;
using morphnet::testing::code_of;

namespace {

ConfusionMatrix published() { return ConfusionMatrix(7, testing::published_confusion()); }

double round2(double v) { return std::round(v * 100) / 100; }

}  // namespace

TEST_CASE("confusion matrix counting") {
  const std::vector<int> p{0, 1, 1, 2, 0}, l{0, 1, 2, 2, 1};
  const ConfusionMatrix cm = confusion(p, l, 3);
  CHECK(cm.at(0, 0) == 1);
  CHECK(cm.at(2, 1) == 1);
  CHECK(cm.at(1, 0) == 1);
  CHECK(cm.trace() == 3);

  Rng rng(1);
  std::vector<int> rp(500), rl(500);
  std::vector<std::uint64_t> oracle(49, 0);
  for (std::size_t i = 0; i < 500; ++i) {
    rp[i] = static_cast<int>(rng.below(7));
    rl[i] = static_cast<int>(rng.below(7));
    ++oracle[static_cast<std::size_t>(rl[i] * 7 + rp[i])];
  }
  const ConfusionMatrix rc = confusion(rp, rl);
  CHECK(rc.counts() == oracle);
  std::size_t same = 0;
  for (std::size_t i = 0; i < 500; ++i) same += rp[i] == rl[i];
  CHECK(report(rc).accuracy == static_cast<double>(same) / 500.0);

  const ConfusionMatrix perfect = confusion(l, l, 3);
  for (std::size_t a = 0; a < 3; ++a)
    for (std::size_t b = 0; b < 3; ++b)
      if (a != b) CHECK(perfect.at(a, b) == 0);

  CHECK(code_of([&] { confusion(std::vector<int>{0, 7}, std::vector<int>{0, 1}); }) ==
        ErrorCode::kInvalidArgument);
  CHECK(code_of([&] { confusion(std::vector<int>{0}, std::vector<int>{0, 1}); }) == ErrorCode::kShape);
  CHECK(code_of([&] { confusion(std::vector<int>{-1}, std::vector<int>{0}); }) == ErrorCode::kInvalidArgument);
}

TEST_CASE("published matrix reproduces the reported scores") {
  const ConfusionMatrix cm = published();
  CHECK(cm.total() == 2589);
  CHECK(cm.trace() == 2426);
  const ClassificationReport r = report(cm);
  CHECK(std::abs(r.accuracy - 0.9370) < 5e-5);
  const auto& precision = testing::kPublishedPrecision;
  const auto& recall = testing::kPublishedRecall;
  const auto& f1 = testing::kPublishedF1;
  for (std::size_t c = 0; c < 7; ++c) {
    CAPTURE(c);
    CHECK(round2(r.per_class[c].precision) == doctest::Approx(precision[c]));
    CHECK(round2(r.per_class[c].recall) == doctest::Approx(recall[c]));
    CHECK(round2(r.per_class[c].f1) == doctest::Approx(f1[c]));
    const double p = static_cast<double>(cm.at(c, c)) / static_cast<double>(cm.column_sum(c));
    const double q = static_cast<double>(cm.at(c, c)) / static_cast<double>(cm.row_sum(c));
    CHECK(r.per_class[c].precision == doctest::Approx(p).epsilon(1e-15));
    CHECK(r.per_class[c].f1 == doctest::Approx(2 * p * q / (p + q)).epsilon(1e-15));
    CHECK(r.per_class[c].support == cm.row_sum(c));
  }
  double mp = 0;
  for (const auto& s : r.per_class) mp += s.precision;
  CHECK(r.macro_precision == doctest::Approx(mp / 7).epsilon(1e-15));
  const std::string json = format_report_json(r, cm);
  CHECK(json.find("\"accuracy\"") != std::string::npos);
  CHECK(format_report_text(r, cm).find("0.9370") != std::string::npos);
}

TEST_CASE("degenerate reports") {
  const ClassificationReport id = report(ConfusionMatrix(2, {5, 0, 0, 3}));
  CHECK(id.accuracy == 1.0);
  for (const auto& s : id.per_class) {
    CHECK(s.precision == 1.0);
    CHECK(s.recall == 1.0);
    CHECK(s.f1 == 1.0);
  }
  const ClassificationReport z = report(ConfusionMatrix(3, {4, 0, 0, 2, 0, 0, 0, 0, 0}));
  CHECK(z.per_class[1].precision == 0.0);
  CHECK(z.per_class[1].undefined_precision);
  CHECK(z.per_class[2].undefined_recall);
  CHECK(z.per_class[2].f1 == 0.0);
  CHECK(code_of([] { report(ConfusionMatrix(3)); }) == ErrorCode::kInvalidArgument);
  CHECK(code_of([] { ConfusionMatrix(2, {1, 2, 3}); }) == ErrorCode::kShape);
}

TEST_CASE("rmse") {
  std::vector<double> a(37, 0.3), b(37, 0.4);
  CHECK(rmse(a, a, 37).rmse == 0.0);
  CHECK(rmse(a, b, 37).rmse == doctest::Approx(0.1).epsilon(1e-12));

  Rng rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + rng.below(9);
    std::vector<double> x(n * 37), y(n * 37), z(n * 37);
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = rng.uniform(0, 1);
      y[i] = rng.uniform(0, 1);
      z[i] = rng.uniform(0, 1);
    }
    long double acc = 0;
    for (std::size_t i = 0; i < x.size(); ++i) acc += (static_cast<long double>(x[i]) - y[i]) * (static_cast<long double>(x[i]) - y[i]);
    const double want = static_cast<double>(std::sqrt(acc / x.size()));
    const double xy = rmse(x, y, 37).rmse;
    CHECK(std::abs(xy - want) < 1e-9);
    CHECK(xy == rmse(y, x, 37).rmse);
    CHECK(xy > 0);
    // scaled by sqrt(n*37) this is a Euclidean distance
    CHECK(xy <= rmse(x, z, 37).rmse + rmse(z, y, 37).rmse + 1e-12);
  }
  const auto per = rmse(std::vector<double>{0, 0, 1, 0}, std::vector<double>{0, 0, 0, 0}, 2);
  CHECK(per.per_answer[0] == doctest::Approx(std::sqrt(0.5)));
  CHECK(per.per_answer[1] == 0.0);
  CHECK(code_of([] { rmse(std::vector<double>(37), std::vector<double>(36), 37); }) == ErrorCode::kShape);
  CHECK(code_of([] { rmse(std::vector<double>(36), std::vector<double>(36), 37); }) == ErrorCode::kShape);
}

TEST_CASE("ensemble averaging") {
  Rng rng(3);
  std::vector<double> m(74);
  for (double& v : m) v = rng.uniform(0, 1);
  CHECK(ensemble_average({m}) == m);
  CHECK(ensemble_average({m, m}) == m);
  CHECK(ensemble_average({m, m, m, m, m}) == m);
  const auto avg = ensemble_average({std::vector<double>{0, 1, 0.5}, std::vector<double>{1, 1, 0}});
  CHECK(avg == std::vector<double>{0.5, 1.0, 0.25});
  CHECK(code_of([] { ensemble_average({}); }) == ErrorCode::kInvalidArgument);
  CHECK(code_of([] { ensemble_average({std::vector<double>(3), std::vector<double>(4)}); }) == ErrorCode::kShape);
}

TEST_CASE("submission format") {
  const std::string one = format_submission({"100008"}, std::vector<double>(37, 0.5));
  CHECK(std::count(one.begin(), one.end(), '\n') == 2);
  const std::string first = one.substr(0, one.find('\n'));
  const std::string second = one.substr(one.find('\n') + 1);
  CHECK(std::count(first.begin(), first.end(), ',') == 37);
  CHECK(std::count(second.begin(), second.end(), ',') == 37);
  CHECK(first.substr(0, 18) == "GalaxyID,Class1.1,");
  CHECK(first.substr(first.size() - 10) == ",Class11.6");

  std::vector<double> v(37, 0.2);
  v[0] = 1.0000001;
  v[1] = -0.3;
  v[2] = 1.0 / 3.0;
  const Submission back = parse_submission(format_submission({"a"}, v));
  CHECK(back.values[0] == 1.0);
  CHECK(back.values[1] == 0.0);
  CHECK(std::abs(back.values[2] - 1.0 / 3.0) < 5e-7);
  CHECK(format_submission({"a"}, v).find(",1.0,") != std::string::npos);

  Rng rng(4);
  std::vector<double> many(5 * 37);
  for (double& x : many) x = rng.uniform(0, 1);
  const Submission s = parse_submission(format_submission({"1", "2", "3", "4", "5"}, many));
  CHECK(s.ids == std::vector<std::string>{"1", "2", "3", "4", "5"});
  for (std::size_t i = 0; i < many.size(); ++i) CHECK(s.values[i] == doctest::Approx(many[i]).epsilon(1e-6));

  CHECK(code_of([] { format_submission({"a", "b"}, std::vector<double>(37)); }) == ErrorCode::kShape);
  std::vector<double> nan(37, std::nan(""));
  CHECK(code_of([&] { format_submission({"a"}, nan); }) == ErrorCode::kNumeric);
  CHECK(code_of([] { parse_submission("id,x\n"); }) == ErrorCode::kSchema);
}

TEST_CASE("feature map normalization and layout") {
  const float map[] = {1, 10, 3, 10, 5, 10, 2, 10};  // 2x2, two channels
  const auto a = normalize_channel(map, 2, 2, 2, 0);
  CHECK(a == std::vector<float>{0.0f, 0.5f, 1.0f, 0.25f});
  CHECK(normalize_channel(map, 2, 2, 2, 1) == std::vector<float>(4, 0.5f));

  scaling::Network<float> net(scaling::toy_arch(), 5);
  const auto names = net.layer_names();
  REQUIRE(names.size() >= 3);
  Rng rng(6);
  gz2::Image img(32, 32, 3);
  for (float& v : img.pixels) v = static_cast<float>(rng.uniform(0, 1));
  FeatureMapOptions opt;
  opt.channels = 6;
  opt.columns = 4;
  opt.seed = 1;
  const auto grids = feature_maps(net, img, {names[0], names.back()}, opt);
  REQUIRE(grids.size() == 2);
  for (const FeatureGrid& g : grids) {
    CHECK(g.channels.size() == 6);
    CHECK(std::is_sorted(g.channels.begin(), g.channels.end()));
    CHECK(g.columns == 4);
    CHECK(g.rows == 2);
    CHECK(g.values.height == 2 * g.tile_height);
    CHECK(g.values.width == 4 * g.tile_width);
    CHECK(g.raster.pixels.size() == g.values.pixels.size());
    for (std::size_t t = 0; t < 6; ++t) {
      float lo = 2, hi = -2;
      const std::size_t r0 = (t / 4) * g.tile_height, c0 = (t % 4) * g.tile_width;
      for (std::size_t y = 0; y < g.tile_height; ++y)
        for (std::size_t x = 0; x < g.tile_width; ++x) {
          lo = std::min(lo, g.values.at(r0 + y, c0 + x, 0));
          hi = std::max(hi, g.values.at(r0 + y, c0 + x, 0));
        }
      CHECK(((lo == 0.0f && hi == 1.0f) || (lo == 0.5f && hi == 0.5f)));
    }
  }
  CHECK(grids[0].tile_height == 16);
  const auto again = feature_maps(net, img, {names[0]}, opt);
  CHECK(again[0].channels == grids[0].channels);
  CHECK(again[0].values == grids[0].values);

  for (const std::string suffix : {".w", ".b"}) net.find_parameter(names[0] + suffix)->value.fill(0.0f);
  const auto flat = feature_maps(net, gz2::Image(32, 32, 3, 0.7f), {names[0]}, opt);
  const FeatureGrid& fg = flat[0];
  bool gray = true;
  for (std::size_t t = 0; t < fg.channels.size(); ++t)
    for (std::size_t y = 0; y < fg.tile_height; ++y)
      for (std::size_t x = 0; x < fg.tile_width; ++x)
        gray = gray && fg.values.at((t / 4) * fg.tile_height + y, (t % 4) * fg.tile_width + x, 0) == 0.5f;
  CHECK(gray);
  // unused slots of the last row stay black
  CHECK(fg.values.at(fg.tile_height, 3 * fg.tile_width, 0) == 0.0f);

  CHECK(code_of([&] { feature_maps(net, img, {"nope"}, opt); }) == ErrorCode::kNotFound);
  opt.columns = 0;
  CHECK(code_of([&] { feature_maps(net, img, {names[0]}, opt); }) == ErrorCode::kInvalidArgument);
}
