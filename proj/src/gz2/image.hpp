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

// Raster containers, decoding, and the preprocessing / augmentation chain.

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "common/rng.hpp"

namespace morphnet::gz2 {

/// Interleaved 8-bit raster, row-major H x W x C.
struct ByteImage {
  std::size_t height = 0, width = 0, channels = 0;
  std::vector<std::uint8_t> pixels;

  std::uint8_t& at(std::size_t y, std::size_t x, std::size_t c) {
    return pixels[(y * width + x) * channels + c];
  }
  std::uint8_t at(std::size_t y, std::size_t x, std::size_t c) const {
    return pixels[(y * width + x) * channels + c];
  }
};

/// Interleaved float raster, row-major H x W x C.
struct Image {
  std::size_t height = 0, width = 0, channels = 0;
  std::vector<float> pixels;

  Image() = default;
  Image(std::size_t h, std::size_t w, std::size_t c, float fill = 0.0f)
      : height(h), width(w), channels(c), pixels(h * w * c, fill) {}

  float& at(std::size_t y, std::size_t x, std::size_t c) {
    return pixels[(y * width + x) * channels + c];
  }
  float at(std::size_t y, std::size_t x, std::size_t c) const {
    return pixels[(y * width + x) * channels + c];
  }

  friend bool operator==(const Image&, const Image&) = default;
};

/// Decodes PNG or JPEG (sniffed from the magic bytes) to 3-channel RGB.
/// Grayscale is replicated and alpha dropped.
ByteImage load_image(const std::string& path);

/// Writes 1- or 3-channel 8-bit PNG.
void write_png(const std::string& path, const ByteImage& img);

/// Keeps the central half of each dimension; both dimensions must be even.
/// 424 x 424 keeps rows and columns [106, 318).
ByteImage central_crop(const ByteImage& img);

/// Divides by 255.
Image rescale(const ByteImage& img);

/// Bilinear resampling with half-pixel centers and edge clamping.
Image resize_bilinear(const Image& img, std::size_t height, std::size_t width);

/// rescale followed by resize to target x target. Targets other than 224 and
/// 256 need `allow_other_target`.
Image rescale_and_resize(const ByteImage& img, std::size_t target,
                         bool allow_other_target = false);

struct AugmentationConfig {
  double rotation_min_deg = 0.0;
  double rotation_max_deg = 90.0;
  double shift_fraction = 0.10;
  bool horizontal_flip = true;
  bool vertical_flip = true;
  double brightness_min = 0.9;
  double brightness_max = 1.2;

  /// Every step disabled.
  static AugmentationConfig identity();
  void validate() const;
};

Image rotate(const Image& img, double degrees);
/// Integer translation; vacated pixels are 0.
Image shift(const Image& img, long dy, long dx);
Image flip_horizontal(const Image& img);
Image flip_vertical(const Image& img);
/// Multiplies by `factor` and clamps to [0, 1].
Image adjust_brightness(const Image& img, double factor);

/// rotate -> shift -> flips -> brightness, all drawn from `rng`.
Image augment(const Image& img, const AugmentationConfig& cfg, Rng& rng);

/// Converts [0, 1] floats to bytes with rounding and clamping.
ByteImage to_bytes(const Image& img);

}  // namespace morphnet::gz2
