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

#pragma once

// Intermediate activation grids: each sampled channel is min-max
// normalized on its own and tiled into one grayscale raster per layer.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "gz2/image.hpp"
#include "scaling/network.hpp"

namespace morphnet::metrics {

struct FeatureMapOptions {
  std::size_t channels = 16;  // sampled per layer (all if the layer has fewer)
  std::size_t columns = 4;
  std::uint64_t seed = 0;
};

struct FeatureGrid {
  std::string layer;
  std::size_t rows = 0, columns = 0;
  std::size_t tile_height = 0, tile_width = 0;
  std::vector<std::size_t> channels;  // sampled, ascending
  /// Normalized tiles, one channel, (rows * tile_height) x (columns * tile_width).
  gz2::Image values;
  gz2::ByteImage raster;
};

/// Per-channel min-max to [0, 1]; a constant channel maps to 0.5.
/// `map` is H x W x C interleaved; returns channel `c` as H x W.
std::vector<float> normalize_channel(const float* map, std::size_t h, std::size_t w,
                                     std::size_t channels, std::size_t c);

/// Runs `input` (H x W x 3, already preprocessed) through `net` and renders
/// the named layers. Unknown names throw kNotFound listing valid ones.
std::vector<FeatureGrid> feature_maps(scaling::Network<float>& net, const gz2::Image& input,
                                      const std::vector<std::string>& layers,
                                      const FeatureMapOptions& opt);

}  // namespace morphnet::metrics
