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

#include "metrics/featmap.hpp"

#include <algorithm>
#include <map>

#include "autodiff/ops.hpp"
#include "common/error.hpp"

namespace morphnet::metrics {

std::vector<float> normalize_channel(const float* map, std::size_t h, std::size_t w,
                                     std::size_t channels, std::size_t c) {
  std::vector<float> out(h * w);
  float lo = map[c], hi = map[c];
  for (std::size_t i = 0; i < h * w; ++i) {
    lo = std::min(lo, map[i * channels + c]);
    hi = std::max(hi, map[i * channels + c]);
  }
  for (std::size_t i = 0; i < h * w; ++i) {
    out[i] = hi > lo ? (map[i * channels + c] - lo) / (hi - lo) : 0.5f;
  }
  return out;
}

std::vector<FeatureGrid> feature_maps(scaling::Network<float>& net, const gz2::Image& input,
                                      const std::vector<std::string>& layers,
                                      const FeatureMapOptions& opt) {
  if (opt.channels == 0 || opt.columns == 0) {
    fail(ErrorCode::kInvalidArgument, "feature maps need channels and columns >= 1");
  }
  const auto names = net.layer_names();
  for (const std::string& l : layers) {
    if (std::find(names.begin(), names.end(), l) == names.end()) {
      std::string valid;
      for (const auto& n : names) valid += (valid.empty() ? "" : ", ") + n;
      fail(ErrorCode::kNotFound, "unknown layer '", l, "'; available: ", valid);
    }
  }
  ad::Tape<float> tape;
  ad::Tensor<float> x({1, input.height, input.width, input.channels}, input.pixels);
  scaling::Captures captures;
  Rng unused(0);
  net.forward(tape, tape.constant(std::move(x)), false, unused, &captures);
  std::map<std::string, ad::Var> by_name(captures.begin(), captures.end());

  std::vector<FeatureGrid> out;
  for (std::size_t li = 0; li < layers.size(); ++li) {
    const auto& act = tape.value(by_name.at(layers[li]));
    const std::size_t h = act.dim(1), w = act.dim(2), c = act.dim(3);
    FeatureGrid g;
    g.layer = layers[li];
    std::vector<std::size_t> pick(c);
    for (std::size_t i = 0; i < c; ++i) pick[i] = i;
    if (opt.channels < c) {
      Rng rng(derive_seed(opt.seed, {li}));
      rng.shuffle(pick);
      pick.resize(opt.channels);
      std::sort(pick.begin(), pick.end());
    }
    g.channels = pick;
    g.columns = std::min(opt.columns, pick.size());
    g.rows = (pick.size() + g.columns - 1) / g.columns;
    g.tile_height = h;
    g.tile_width = w;
    g.values = gz2::Image(g.rows * h, g.columns * w, 1);
    for (std::size_t t = 0; t < pick.size(); ++t) {
      const auto tile = normalize_channel(act.raw(), h, w, c, pick[t]);
      const std::size_t r0 = (t / g.columns) * h, c0 = (t % g.columns) * w;
      for (std::size_t y = 0; y < h; ++y) {
        for (std::size_t xx = 0; xx < w; ++xx) g.values.at(r0 + y, c0 + xx, 0) = tile[y * w + xx];
      }
    }
    g.raster = gz2::to_bytes(g.values);
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace morphnet::metrics
