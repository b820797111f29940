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
#include <cstring>

#include "gz2/synthetic.hpp"
#include "scaling/network.hpp"
#include "support.hpp"
#include "train/checkpoint.hpp"
#include "train/fit.hpp"
#include "train/optim.hpp"

using namespace morphnet;
using namespace morphnet::train;
using ad::Parameter;
using ad::Tensor;
using morphnet::testing::code_of;
using morphnet::testing::TempDir;

namespace {

struct PlainAdam {
  double m = 0, v = 0;
  int t = 0;
  double step(double theta, double g, double lr) {
    ++t;
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mh = m / (1 - std::pow(0.9, t));
    const double vh = v / (1 - std::pow(0.999, t));
    return theta - lr * mh / (std::sqrt(vh) + 1e-8);
  }
};

TrainConfig small_config() {
  TrainConfig c;
  c.epochs = 2;
  c.batch_size = 8;
  c.lr = 0.003;
  c.seed = 5;
  c.preprocessing.crop = CropMode::kNone;
  c.preprocessing.target = 16;
  c.preprocessing.allow_other_target = true;
  c.threads = 2;
  return c;
}

struct SynthSet {
  TempDir dir{"fit"};
  gz2::DatasetManifest manifest;
  SynthSet() {
    gz2::SyntheticOptions o;
    o.count = 56;
    o.size = 16;
    o.seed = 4;
    manifest = gz2::make_synthetic_dataset(dir.path().string(), o).manifest;
  }
};

std::vector<float> flat_params(scaling::Network<float>& net) {
  std::vector<float> out;
  for (auto* p : net.parameters()) out.insert(out.end(), p->value.data().begin(), p->value.data().end());
  return out;
}

}  // namespace

TEST_CASE("adam single step") {
  Adam<double> adam(AdamConfig{0.1});
  Parameter<double> p("p", Tensor<double>({1}));
  p.grad[0] = 1.0;
  std::vector<Parameter<double>*> ps{&p};
  adam.step(ps);
  CHECK(p.value[0] == doctest::Approx(-0.1 / (1 + 1e-8)).epsilon(1e-12));
  CHECK(adam.steps() == 1);

  Adam<double> idle(AdamConfig{0.1});
  Parameter<double> q("q", Tensor<double>({3}, {1, 2, 3}));
  std::vector<Parameter<double>*> qs{&q};
  for (int i = 0; i < 5; ++i) idle.step(qs);
  CHECK(q.value == Tensor<double>({3}, {1, 2, 3}));
}

TEST_CASE("adam matches a scalar reference over many steps") {
  Rng rng(1);
  Adam<double> adam(AdamConfig{0.01});
  Parameter<double> p("p", Tensor<double>({4}, {0.5, -0.2, 1.0, 0.0}));
  std::vector<Parameter<double>*> ps{&p};
  std::vector<PlainAdam> ref(4);
  std::vector<double> theta{0.5, -0.2, 1.0, 0.0};
  for (int s = 0; s < 40; ++s) {
    for (std::size_t i = 0; i < 4; ++i) p.grad[i] = rng.uniform(-2, 2);
    for (std::size_t i = 0; i < 4; ++i) theta[i] = ref[i].step(theta[i], p.grad[i], 0.01);
    adam.step(ps);
  }
  for (std::size_t i = 0; i < 4; ++i) CHECK(p.value[i] == doctest::Approx(theta[i]).epsilon(1e-12));
}

TEST_CASE("adam converges on a quadratic") {
  Adam<double> adam(AdamConfig{0.1});
  Parameter<double> p("p", Tensor<double>({1}));
  std::vector<Parameter<double>*> ps{&p};
  for (int s = 0; s < 500; ++s) {
    p.grad[0] = 2 * (p.value[0] - 3);
    adam.step(ps);
  }
  CHECK(std::abs(p.value[0] - 3) < 0.05);
}

TEST_CASE("adam direction is scale covariant") {
  Rng rng(2);
  Tensor<double> g({6});
  for (auto& v : g.data()) v = rng.uniform(-1, 1);
  Parameter<double> a("a", Tensor<double>({6})), b("b", Tensor<double>({6}));
  a.grad = g;
  for (std::size_t i = 0; i < 6; ++i) b.grad[i] = 2 * g[i];
  Adam<double> oa(AdamConfig{0.01}), ob(AdamConfig{0.01});
  std::vector<Parameter<double>*> pa{&a}, pb{&b};
  oa.step(pa);
  ob.step(pb);
  for (std::size_t i = 0; i < 6; ++i) {
    CHECK(std::signbit(a.value[i]) == std::signbit(b.value[i]));
    CHECK(a.value[i] == doctest::Approx(b.value[i]).epsilon(1e-6));
  }
}

TEST_CASE("adam rejects non-finite gradients untouched") {
  Adam<double> adam(AdamConfig{0.1});
  Parameter<double> a("a", Tensor<double>({2}, {1, 2})), b("b", Tensor<double>({1}, {3}));
  a.grad[0] = 1;
  b.grad[0] = std::nan("");
  std::vector<Parameter<double>*> ps{&a, &b};
  CHECK(code_of([&] { adam.step(ps); }) == ErrorCode::kNumeric);
  CHECK(a.value == Tensor<double>({2}, {1, 2}));
  CHECK(b.value[0] == 3);
}

TEST_CASE("plateau schedule traces") {
  PlateauSchedule s;
  for (double l = 1.0; l > 0.5; l -= 0.01) CHECK_FALSE(s.step(l));
  CHECK(s.lr() == 1.5e-4);

  PlateauSchedule flat;
  std::vector<int> cut;
  for (int e = 1; e <= 6; ++e)
    if (flat.step(1.0)) cut.push_back(e);
  CHECK(cut == std::vector<int>{6});
  CHECK(flat.lr() == doctest::Approx(3e-5).epsilon(1e-12));

  PlateauSchedule late;
  for (double l : {1.0, 1.0, 1.0, 1.0, 1.0}) late.step(l);
  CHECK_FALSE(late.step(0.9));
  CHECK(late.reductions == 0);

  PlateauSchedule many;
  double prev = many.lr();
  for (int e = 0; e < 200; ++e) {
    many.step(1.0);
    CHECK(many.lr() <= prev);
    CHECK(many.lr() >= many.min_lr);
    prev = many.lr();
  }
  PlateauSchedule k;
  k.reductions = 3;
  CHECK(k.lr() == 1.5e-4 * std::pow(0.2, 3));
  CHECK(many.lr() == many.min_lr);
}

TEST_CASE("early stop traces") {
  EarlyStop mono;
  for (int e = 0; e < 50; ++e) CHECK_FALSE(mono.step(1.0 - e * 0.01));

  EarlyStop flat;
  int stop = 0;
  for (int e = 1; e <= 20 && !stop; ++e)
    if (flat.step(1.0)) stop = e;
  CHECK(stop == 10);

  EarlyStop reset;
  stop = 0;
  for (int e = 1; e <= 30 && !stop; ++e)
    if (reset.step(e == 9 ? 0.5 : 1.0)) stop = e;
  CHECK(stop == 18);
}

TEST_CASE("checkpoint bytes") {
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);

  scaling::Network<float> net(scaling::toy_arch(), 3);
  Adam<float> adam(AdamConfig{0.01});
  auto ps = net.parameters();
  Rng rng(4);
  for (auto* p : ps)
    for (auto& g : p->grad.data()) g = static_cast<float>(rng.uniform(-1, 1));
  adam.step(ps);
  TrainState st{7, 0.25, adam.steps(), 0.002, 99};
  const Checkpoint c = capture(net, &adam, st);
  CHECK(c.tensors.size() == 3 * ps.size());
  const std::string bytes = serialize_checkpoint(c);
  CHECK(bytes.substr(0, 4) == "MNET");
  CHECK(deserialize_checkpoint(bytes) == c);

  TempDir dir("ckpt");
  save_checkpoint(dir.file("a.ckpt"), c);
  CHECK(load_checkpoint(dir.file("a.ckpt")) == c);

  std::string bad = bytes;
  bad[bad.size() / 2] ^= 0x10;
  CHECK(code_of([&] { deserialize_checkpoint(bad); }) == ErrorCode::kIntegrity);
  CHECK(code_of([&] { deserialize_checkpoint(bytes.substr(0, bytes.size() - 100)); }) == ErrorCode::kIntegrity);
  bad = bytes;
  bad[0] = 'X';
  CHECK(code_of([&] { deserialize_checkpoint(bad); }) == ErrorCode::kIntegrity);
  bad = bytes;
  bad[4] = 2;
  CHECK(code_of([&] { deserialize_checkpoint(bad); }) == ErrorCode::kSchema);
  CHECK(code_of([&] { deserialize_checkpoint("MN"); }) == ErrorCode::kIntegrity);
  CHECK(code_of([&] { load_checkpoint(dir.file("none.ckpt")); }) == ErrorCode::kIo);

  // inference equivalence after restore into a differently seeded network
  scaling::Network<float> other(scaling::toy_arch(), 17);
  Adam<float> other_adam(AdamConfig{0.5});
  restore(load_checkpoint(dir.file("a.ckpt")), other, &other_adam);
  CHECK(flat_params(other) == flat_params(net));
  CHECK(other_adam.steps() == adam.steps());
  CHECK(other_adam.lr() == doctest::Approx(0.002));
  Tensor<float> x({2, 32, 32, 3});
  for (auto& v : x.data()) v = static_cast<float>(rng.uniform(0, 1));
  ad::Tape<float> t;
  Rng r1(0), r2(0);
  const Tensor<float> y1 = t.value(net.forward(t, t.constant(x), false, r1));
  CHECK(y1 == t.value(other.forward(t, t.constant(x), false, r2)));

  scaling::Network<float> wrong(scaling::preset("b0"), 1);
  CHECK(code_of([&] { restore(c, wrong); }).has_value());
}

TEST_CASE("batches do not depend on worker count") {
  SynthSet s;
  PreprocessConfig pre = small_config().preprocessing;
  ImageDataset one(s.manifest.entries, s.dir.path().string(), pre, 1);
  ImageDataset four(s.manifest.entries, s.dir.path().string(), pre, 4);
  const gz2::AugmentationConfig aug;
  std::vector<std::size_t> idx{0, 5, 9, 13, 30, 2, 7};
  const Batch a = one.make_batch(idx, nn::HeadMode::kClassify, &aug, 3, 1);
  const Batch b = four.make_batch(idx, nn::HeadMode::kClassify, &aug, 3, 1);
  CHECK(a.inputs == b.inputs);
  CHECK(a.targets == b.targets);
  CHECK(a.inputs.shape() == ad::Shape{7, 16, 16, 3});
  CHECK_FALSE(a.inputs == one.make_batch(idx, nn::HeadMode::kClassify, &aug, 3, 2).inputs);
  for (std::size_t i = 0; i < idx.size(); ++i) {
    float row = 0;
    for (std::size_t k = 0; k < 7; ++k) row += a.targets[i * 7 + k];
    CHECK(row == 1.0f);
    CHECK(a.targets[i * 7 + static_cast<std::size_t>(a.labels[i])] == 1.0f);
  }
  const Batch r = one.make_batch(idx, nn::HeadMode::kRegress, nullptr, 0, 0);
  CHECK(r.targets.shape() == ad::Shape{7, 37});
  CHECK(one.make_batch(idx, std::nullopt, nullptr, 0, 0).targets.size() == 0);

  BatchLoader loader(four, {3, 1, 4, 1, 5, 9, 2, 6, 5, 3, 5}, 4, nn::HeadMode::kClassify, aug, 3, 1);
  std::vector<std::size_t> sizes;
  while (auto batch = loader.next()) sizes.push_back(batch->indices.size());
  CHECK(sizes == std::vector<std::size_t>{4, 4, 3});
}

TEST_CASE("validation carve") {
  SynthSet s;
  std::vector<gz2::ManifestEntry> train;
  for (const auto& e : s.manifest.entries)
    if (e.split == gz2::Split::kTrain) train.push_back(e);
  const auto [fit_idx, val_idx] = carve_validation(train, 0.1, 3);
  CHECK(fit_idx.size() + val_idx.size() == train.size());
  std::array<int, 7> per{};
  for (std::size_t i : val_idx) ++per[static_cast<std::size_t>(train[i].label)];
  for (int n : per) CHECK(n >= 1);
  CHECK(carve_validation(train, 0.1, 3) == std::make_pair(fit_idx, val_idx));
}

TEST_CASE("fit is deterministic and keeps the best epoch") {
  SynthSet s;
  const TrainConfig cfg = small_config();
  scaling::Network<float> a(scaling::toy_arch(), 1), b(scaling::toy_arch(), 1);
  std::size_t seen = 0;
  const FitResult ra = fit(a, s.manifest, s.dir.path().string(), LossKind::kCrossEntropy, cfg,
                           [&](const EpochRecord&) { ++seen; });
  const FitResult rb = fit(b, s.manifest, s.dir.path().string(), LossKind::kCrossEntropy, cfg);
  CHECK(seen == 2);
  REQUIRE(ra.history.size() == 2);
  CHECK(ra.history == rb.history);
  CHECK(serialize_checkpoint(ra.best) == serialize_checkpoint(rb.best));
  CHECK(ra.aborted.empty());
  for (const auto& h : ra.history) {
    CHECK(ra.best.state.best_val_loss <= h.val_loss);
    CHECK(std::isfinite(h.train_loss));
  }
  CHECK(ra.history[ra.best_epoch - 1].val_loss == ra.best.state.best_val_loss);
  const std::string csv = format_history_csv(ra.history);
  CHECK(csv.substr(0, 6) == "epoch,");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
}

TEST_CASE("zero learning rate leaves the network unchanged") {
  SynthSet s;
  TrainConfig cfg = small_config();
  cfg.lr = 0;
  cfg.augmentation.reset();
  scaling::Network<float> net(scaling::toy_arch(), 2);
  const auto before = flat_params(net);
  const FitResult r = fit(net, s.manifest, s.dir.path().string(), LossKind::kCrossEntropy, cfg);
  CHECK(flat_params(net) == before);
  REQUIRE(r.history.size() == 2);
  CHECK(r.history[0].val_loss == r.history[1].val_loss);
  CHECK(r.history[0].train_metric == r.history[1].train_metric);
}

TEST_CASE("fit argument checks") {
  SynthSet s;
  TrainConfig cfg = small_config();
  scaling::Network<float> net(scaling::toy_arch(), 2);
  CHECK(code_of([&] { fit(net, s.manifest, s.dir.path().string(), LossKind::kRmse, cfg); }) ==
        ErrorCode::kConfiguration);
  CHECK(code_of([&] { fit(net, s.manifest, "/nonexistent", LossKind::kCrossEntropy, cfg); }) ==
        ErrorCode::kNotFound);
  TrainConfig bad = cfg;
  bad.batch_size = 0;
  CHECK(code_of([&] { bad.validate(); }) == ErrorCode::kInvalidArgument);
  bad = cfg;
  bad.lr = -1;
  CHECK(code_of([&] { bad.validate(); }) == ErrorCode::kInvalidArgument);
  gz2::DatasetManifest empty;
  CHECK(code_of([&] { fit(net, empty, "", LossKind::kCrossEntropy, cfg); }) == ErrorCode::kInvalidArgument);
}
