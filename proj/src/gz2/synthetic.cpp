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

#include "gz2/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>

#include "common/error.hpp"
#include "common/io.hpp"

namespace morphnet::gz2 {
namespace {

using Rgb = std::array<double, 3>;

constexpr Rgb kSmoothColor{1.0, 0.85, 0.6};
constexpr Rgb kDiskColor{1.0, 0.92, 0.78};
constexpr Rgb kArmColor{0.65, 0.78, 1.0};
constexpr Rgb kIrregularColor{0.85, 0.8, 1.0};

struct Canvas {
  std::size_t size;
  std::vector<double> px;  // size * size * 3

  explicit Canvas(std::size_t s) : size(s), px(s * s * 3, 0.0) {}

  /// Elliptical Gaussian centred at (cx, cy) with semi-axes (a, b), rotated by
  /// theta.
  void blob(double cx, double cy, double a, double b, double theta, double peak,
            const Rgb& color) {
    const double cs = std::cos(theta), sn = std::sin(theta);
    for (std::size_t y = 0; y < size; ++y) {
      for (std::size_t x = 0; x < size; ++x) {
        const double dx = static_cast<double>(x) - cx, dy = static_cast<double>(y) - cy;
        const double u = (cs * dx + sn * dy) / a;
        const double v = (-sn * dx + cs * dy) / b;
        const double w = peak * std::exp(-0.5 * (u * u + v * v));
        if (w < 1e-4) continue;
        for (int c = 0; c < 3; ++c) px[(y * size + x) * 3 + c] += w * color[c];
      }
    }
  }

  void arms(double cx, double cy, double r0, double theta, double sigma, const Rgb& color) {
    for (int arm = 0; arm < 2; ++arm) {
      for (double t = 0.0; t <= 1.6 * std::numbers::pi; t += 0.12) {
        const double r = r0 * std::exp(0.28 * t);
        const double ang = theta + t + arm * std::numbers::pi;
        blob(cx + r * std::cos(ang), cy + r * std::sin(ang), sigma, sigma, 0.0,
             0.55 * (1.0 - 0.25 * t / std::numbers::pi), color);
      }
    }
  }
};

}  // namespace

ByteImage render_synthetic(int label, std::size_t size, Rng& rng) {
  if (label < 0 || label >= static_cast<int>(kNumClasses)) {
    fail(ErrorCode::kInvalidArgument, "synthetic label ", label, " outside 0..6");
  }
  if (size < 8) fail(ErrorCode::kInvalidArgument, "synthetic images need size >= 8");
  const double s = static_cast<double>(size);
  Canvas cv(size);
  const double cx = s / 2 - 0.5 + rng.uniform(-0.06, 0.06) * s;
  const double cy = s / 2 - 0.5 + rng.uniform(-0.06, 0.06) * s;
  const double theta = rng.uniform(0.0, std::numbers::pi);
  const double scale = s * rng.uniform(0.2, 0.25);
  const double peak = rng.uniform(0.75, 0.95);
  switch (label) {
    case 0:
      cv.blob(cx, cy, 0.5 * scale, 0.5 * scale, 0.0, peak, kSmoothColor);
      break;
    case 1:
      cv.blob(cx, cy, 0.7 * scale, 0.3 * scale, theta, peak, kSmoothColor);
      break;
    case 2:
      cv.blob(cx, cy, 0.95 * scale, 0.14 * scale, theta, peak, kSmoothColor);
      break;
    case 3:
      cv.blob(cx, cy, 1.3 * scale, 0.07 * scale + 0.45, theta, peak, kDiskColor);
      cv.blob(cx, cy, 0.18 * scale, 0.18 * scale, 0.0, 0.5 * peak, kDiskColor);
      break;
    case 4:
      cv.blob(cx, cy, 0.2 * scale, 0.2 * scale, 0.0, peak, kSmoothColor);
      cv.blob(cx, cy, 0.6 * scale, 0.12 * scale, theta, 0.7 * peak, kSmoothColor);
      cv.arms(cx, cy, 0.6 * scale, theta, 0.06 * s, kArmColor);
      break;
    case 5:
      cv.blob(cx, cy, 0.22 * scale, 0.22 * scale, 0.0, peak, kSmoothColor);
      cv.arms(cx, cy, 0.3 * scale, theta, 0.06 * s, kArmColor);
      break;
    default: {
      const auto blobs = 4 + rng.below(3);
      for (std::uint64_t i = 0; i < blobs; ++i) {
        const double ox = rng.uniform(-0.8, 0.8) * scale;
        const double oy = rng.uniform(-0.8, 0.8) * scale;
        const double r = rng.uniform(0.12, 0.3) * scale;
        cv.blob(cx + ox, cy + oy, r, r * rng.uniform(0.5, 1.0), rng.uniform(0.0, 3.2),
                rng.uniform(0.4, 0.8), kIrregularColor);
      }
      break;
    }
  }
  ByteImage out;
  out.height = out.width = size;
  out.channels = 3;
  out.pixels.resize(size * size * 3);
  for (std::size_t i = 0; i < out.pixels.size(); ++i) {
    const double v = std::clamp(cv.px[i] + 0.03 + rng.normal(0.0, 0.02), 0.0, 1.0);
    out.pixels[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
  }
  return out;
}

std::array<double, kNumAnswers> synthetic_fractions(int label, Rng& rng) {
  const DecisionTree tree = DecisionTree::standard();
  const auto off = tree.offsets();
  // Baseline per-task distributions; the class-specific answers are then
  // pushed to the front.
  std::vector<std::vector<double>> f(tree.tasks.size());
  for (std::size_t t = 0; t < tree.tasks.size(); ++t) {
    const std::size_t n = tree.tasks[t].answers.size();
    f[t].assign(n, 1.0 / static_cast<double>(n));
  }
  auto set = [&](std::size_t task, std::vector<double> v) { f[task - 1] = std::move(v); };
  set(6, {0.08, 0.92});
  switch (label) {
    case 0: set(1, {0.9, 0.08, 0.02}); set(7, {0.85, 0.1, 0.05}); break;
    case 1: set(1, {0.9, 0.08, 0.02}); set(7, {0.1, 0.85, 0.05}); break;
    case 2: set(1, {0.9, 0.08, 0.02}); set(7, {0.05, 0.1, 0.85}); break;
    case 3: set(1, {0.06, 0.92, 0.02}); set(2, {0.9, 0.1}); break;
    case 4:
    case 5:
      set(1, {0.05, 0.93, 0.02});
      set(2, {0.04, 0.96});
      set(3, label == 4 ? std::vector<double>{0.95, 0.05} : std::vector<double>{0.05, 0.95});
      set(4, {0.92, 0.08});
      break;
    default:
      set(1, {0.6, 0.38, 0.02});
      set(6, {0.85, 0.15});
      set(8, {0.02, 0.02, 0.3, 0.3, 0.1, 0.2, 0.06});
      break;
  }
  std::array<double, kNumAnswers> out{};
  for (std::size_t t = 0; t < f.size(); ++t) {
    double total = 0;
    std::vector<double> v = f[t];
    for (double& x : v) {
      x = std::max(0.0, x + rng.uniform(-0.02, 0.02));
      total += x;
    }
    for (std::size_t a = 0; a < v.size(); ++a) out[off[t] + a] = total > 0 ? v[a] / total : 0.0;
  }
  return out;
}

SyntheticDataset make_synthetic_dataset(const std::string& dir, const SyntheticOptions& opt) {
  if (opt.count < 2 * kNumClasses) {
    fail(ErrorCode::kInvalidArgument, "synthetic set needs at least ", 2 * kNumClasses,
         " images");
  }
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) fail(ErrorCode::kIo, "cannot create '", dir, "'");
  const DecisionTree tree = DecisionTree::standard();
  SyntheticDataset ds;
  std::vector<LabeledSample> samples;
  for (std::size_t i = 0; i < opt.count; ++i) {
    const int label = static_cast<int>(i % kNumClasses);
    char id[32];
    std::snprintf(id, sizeof id, "syn%05zu", i);
    Rng rng(derive_seed(opt.seed, {i}));
    write_png(dir + "/" + id + ".png", render_synthetic(label, opt.size, rng));
    const auto raw = synthetic_fractions(label, rng);
    CatalogRow row;
    row.galaxy_id = id;
    row.fractions = propagate_tree(raw, tree);
    ds.catalog.push_back(row);
    samples.push_back({id, label});
  }
  ds.manifest = split_dataset(samples, SplitRatio{}, opt.seed, "", "png");
  for (ManifestEntry& e : ds.manifest.entries) {
    const auto it = std::find_if(ds.catalog.begin(), ds.catalog.end(),
                                 [&](const CatalogRow& r) { return r.galaxy_id == e.galaxy_id; });
    std::array<float, kNumAnswers> t{};
    for (std::size_t k = 0; k < kNumAnswers; ++k) t[k] = static_cast<float>(it->fractions[k]);
    e.targets = t;
  }
  io::write_file_atomic(dir + "/catalog.csv", format_catalog(ds.catalog));
  save_manifest(dir + "/manifest.csv", ds.manifest);
  return ds;
}

}  // namespace morphnet::gz2
