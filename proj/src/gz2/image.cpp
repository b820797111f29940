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

#include "gz2/image.hpp"

#include <jpeglib.h>
#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <memory>
#include <numbers>

#include "common/error.hpp"
#include "common/io.hpp"

namespace morphnet::gz2 {
namespace {

ByteImage decode_png(const std::string& path, const std::string& bytes) {
  png_image img{};
  img.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_memory(&img, bytes.data(), bytes.size())) {
    fail(ErrorCode::kIo, "'", path, "': ", img.message);
  }
  img.format = PNG_FORMAT_RGB;
  ByteImage out;
  out.height = img.height;
  out.width = img.width;
  out.channels = 3;
  out.pixels.resize(PNG_IMAGE_SIZE(img));
  if (!png_image_finish_read(&img, nullptr, out.pixels.data(), 0, nullptr)) {
    const std::string msg = img.message;
    png_image_free(&img);
    fail(ErrorCode::kIo, "'", path, "': ", msg);
  }
  return out;
}

struct JpegError {
  jpeg_error_mgr mgr;
  std::jmp_buf jump;
  char message[JMSG_LENGTH_MAX];
};

void jpeg_error_exit(j_common_ptr cinfo) {
  auto* err = reinterpret_cast<JpegError*>(cinfo->err);
  (*cinfo->err->format_message)(cinfo, err->message);
  std::longjmp(err->jump, 1);
}

ByteImage decode_jpeg(const std::string& path, const std::string& bytes) {
  jpeg_decompress_struct cinfo{};
  JpegError err{};
  cinfo.err = jpeg_std_error(&err.mgr);
  err.mgr.error_exit = jpeg_error_exit;
  ByteImage out;
  if (setjmp(err.jump)) {
    jpeg_destroy_decompress(&cinfo);
    fail(ErrorCode::kIo, "'", path, "': ", err.message);
  }
  jpeg_create_decompress(&cinfo);
  jpeg_mem_src(&cinfo, reinterpret_cast<const unsigned char*>(bytes.data()),
               static_cast<unsigned long>(bytes.size()));
  jpeg_read_header(&cinfo, TRUE);
  cinfo.out_color_space = JCS_RGB;
  jpeg_start_decompress(&cinfo);
  out.height = cinfo.output_height;
  out.width = cinfo.output_width;
  out.channels = 3;
  out.pixels.resize(out.height * out.width * 3);
  while (cinfo.output_scanline < cinfo.output_height) {
    JSAMPROW row = out.pixels.data() + cinfo.output_scanline * out.width * 3;
    jpeg_read_scanlines(&cinfo, &row, 1);
  }
  jpeg_finish_decompress(&cinfo);
  jpeg_destroy_decompress(&cinfo);
  return out;
}

float sample_zero(const Image& img, double y, double x, std::size_t c) {
  const double fy = std::floor(y), fx = std::floor(x);
  const double wy = y - fy, wx = x - fx;
  const long y0 = static_cast<long>(fy), x0 = static_cast<long>(fx);
  const long h = static_cast<long>(img.height), w = static_cast<long>(img.width);
  auto px = [&](long yy, long xx) -> double {
    if (yy < 0 || xx < 0 || yy >= h || xx >= w) return 0.0;
    return img.at(static_cast<std::size_t>(yy), static_cast<std::size_t>(xx), c);
  };
  return static_cast<float>((1 - wy) * ((1 - wx) * px(y0, x0) + wx * px(y0, x0 + 1)) +
                            wy * ((1 - wx) * px(y0 + 1, x0) + wx * px(y0 + 1, x0 + 1)));
}

}  // namespace

ByteImage load_image(const std::string& path) {
  const std::string bytes = io::read_file(path);
  static const unsigned char kPng[] = {0x89, 'P', 'N', 'G'};
  if (bytes.size() >= 4 && std::equal(kPng, kPng + 4, bytes.begin(),
                                      [](unsigned char a, char b) {
                                        return a == static_cast<unsigned char>(b);
                                      })) {
    return decode_png(path, bytes);
  }
  if (bytes.size() >= 3 && static_cast<unsigned char>(bytes[0]) == 0xFF &&
      static_cast<unsigned char>(bytes[1]) == 0xD8) {
    return decode_jpeg(path, bytes);
  }
  fail(ErrorCode::kIo, "'", path, "' is neither PNG nor JPEG");
}

void write_png(const std::string& path, const ByteImage& img) {
  if (img.channels != 1 && img.channels != 3) {
    fail(ErrorCode::kInvalidArgument, "write_png: need 1 or 3 channels, got ", img.channels);
  }
  if (img.pixels.size() != img.height * img.width * img.channels || img.pixels.empty()) {
    fail(ErrorCode::kShape, "write_png: pixel buffer does not match dimensions");
  }
  png_image out{};
  out.version = PNG_IMAGE_VERSION;
  out.width = static_cast<png_uint_32>(img.width);
  out.height = static_cast<png_uint_32>(img.height);
  out.format = img.channels == 1 ? PNG_FORMAT_GRAY : PNG_FORMAT_RGB;
  png_alloc_size_t size = 0;
  if (!png_image_write_to_memory(&out, nullptr, &size, 0, img.pixels.data(), 0, nullptr)) {
    fail(ErrorCode::kIo, "png encode failed: ", out.message);
  }
  std::string buffer(size, '\0');
  if (!png_image_write_to_memory(&out, buffer.data(), &size, 0, img.pixels.data(), 0,
                                 nullptr)) {
    fail(ErrorCode::kIo, "png encode failed: ", out.message);
  }
  buffer.resize(size);
  io::write_file_atomic(path, buffer);
}

ByteImage central_crop(const ByteImage& img) {
  if (img.height == 0 || img.width == 0 || img.height % 2 || img.width % 2) {
    fail(ErrorCode::kShape, "central_crop: dimensions must be even, got ", img.height, "x",
         img.width);
  }
  ByteImage out;
  out.height = img.height / 2;
  out.width = img.width / 2;
  out.channels = img.channels;
  out.pixels.resize(out.height * out.width * out.channels);
  const std::size_t oy = img.height / 4, ox = img.width / 4;
  for (std::size_t y = 0; y < out.height; ++y) {
    const auto* src = &img.pixels[((y + oy) * img.width + ox) * img.channels];
    std::copy(src, src + out.width * img.channels,
              &out.pixels[y * out.width * out.channels]);
  }
  return out;
}

Image rescale(const ByteImage& img) {
  Image out(img.height, img.width, img.channels);
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    out.pixels[i] = static_cast<float>(img.pixels[i]) / 255.0f;
  }
  return out;
}

Image resize_bilinear(const Image& img, std::size_t height, std::size_t width) {
  if (img.height == 0 || img.width == 0 || height == 0 || width == 0) {
    fail(ErrorCode::kShape, "resize: empty image or target");
  }
  if (height == img.height && width == img.width) return img;
  Image out(height, width, img.channels);
  const double sy = static_cast<double>(img.height) / static_cast<double>(height);
  const double sx = static_cast<double>(img.width) / static_cast<double>(width);
  for (std::size_t y = 0; y < height; ++y) {
    const double fy = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0,
                                 static_cast<double>(img.height - 1));
    const auto y0 = static_cast<std::size_t>(fy);
    const std::size_t y1 = std::min(y0 + 1, img.height - 1);
    const double wy = fy - static_cast<double>(y0);
    for (std::size_t x = 0; x < width; ++x) {
      const double fx = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0,
                                   static_cast<double>(img.width - 1));
      const auto x0 = static_cast<std::size_t>(fx);
      const std::size_t x1 = std::min(x0 + 1, img.width - 1);
      const double wx = fx - static_cast<double>(x0);
      for (std::size_t c = 0; c < img.channels; ++c) {
        const double top = (1 - wx) * img.at(y0, x0, c) + wx * img.at(y0, x1, c);
        const double bot = (1 - wx) * img.at(y1, x0, c) + wx * img.at(y1, x1, c);
        out.at(y, x, c) = static_cast<float>((1 - wy) * top + wy * bot);
      }
    }
  }
  return out;
}

Image rescale_and_resize(const ByteImage& img, std::size_t target,
                         bool allow_other_target) {
  if (!allow_other_target && target != 224 && target != 256) {
    fail(ErrorCode::kInvalidArgument, "target size must be 224 or 256, got ", target);
  }
  return resize_bilinear(rescale(img), target, target);
}

AugmentationConfig AugmentationConfig::identity() {
  AugmentationConfig c;
  c.rotation_max_deg = 0.0;
  c.shift_fraction = 0.0;
  c.horizontal_flip = false;
  c.vertical_flip = false;
  c.brightness_min = 1.0;
  c.brightness_max = 1.0;
  return c;
}

void AugmentationConfig::validate() const {
  if (!(rotation_min_deg >= 0.0 && rotation_min_deg <= rotation_max_deg &&
        rotation_max_deg <= 360.0)) {
    fail(ErrorCode::kInvalidArgument, "rotation range must satisfy 0 <= min <= max <= 360");
  }
  if (!(shift_fraction >= 0.0 && shift_fraction < 0.5)) {
    fail(ErrorCode::kInvalidArgument, "shift fraction must be in [0, 0.5)");
  }
  if (!(brightness_min > 0.0 && brightness_min <= brightness_max)) {
    fail(ErrorCode::kInvalidArgument, "brightness range must satisfy 0 < min <= max");
  }
}

Image rotate(const Image& img, double degrees) {
  Image out(img.height, img.width, img.channels);
  const double rad = degrees * std::numbers::pi / 180.0;
  const double cs = std::cos(rad), sn = std::sin(rad);
  const double cy = (static_cast<double>(img.height) - 1) / 2;
  const double cx = (static_cast<double>(img.width) - 1) / 2;
  for (std::size_t y = 0; y < img.height; ++y) {
    for (std::size_t x = 0; x < img.width; ++x) {
      const double dy = static_cast<double>(y) - cy, dx = static_cast<double>(x) - cx;
      // Inverse map: rotate the output coordinate back into the source.
      const double sx = cs * dx + sn * dy + cx;
      const double sy = -sn * dx + cs * dy + cy;
      for (std::size_t c = 0; c < img.channels; ++c) out.at(y, x, c) = sample_zero(img, sy, sx, c);
    }
  }
  return out;
}

Image shift(const Image& img, long dy, long dx) {
  Image out(img.height, img.width, img.channels);
  const long h = static_cast<long>(img.height), w = static_cast<long>(img.width);
  for (long y = 0; y < h; ++y) {
    const long sy = y - dy;
    if (sy < 0 || sy >= h) continue;
    for (long x = 0; x < w; ++x) {
      const long sx = x - dx;
      if (sx < 0 || sx >= w) continue;
      for (std::size_t c = 0; c < img.channels; ++c) {
        out.at(static_cast<std::size_t>(y), static_cast<std::size_t>(x), c) =
            img.at(static_cast<std::size_t>(sy), static_cast<std::size_t>(sx), c);
      }
    }
  }
  return out;
}

Image flip_horizontal(const Image& img) {
  Image out(img.height, img.width, img.channels);
  for (std::size_t y = 0; y < img.height; ++y) {
    for (std::size_t x = 0; x < img.width; ++x) {
      for (std::size_t c = 0; c < img.channels; ++c) {
        out.at(y, x, c) = img.at(y, img.width - 1 - x, c);
      }
    }
  }
  return out;
}

Image flip_vertical(const Image& img) {
  Image out(img.height, img.width, img.channels);
  for (std::size_t y = 0; y < img.height; ++y) {
    for (std::size_t x = 0; x < img.width; ++x) {
      for (std::size_t c = 0; c < img.channels; ++c) {
        out.at(y, x, c) = img.at(img.height - 1 - y, x, c);
      }
    }
  }
  return out;
}

Image adjust_brightness(const Image& img, double factor) {
  Image out = img;
  for (float& v : out.pixels) {
    v = static_cast<float>(std::clamp(static_cast<double>(v) * factor, 0.0, 1.0));
  }
  return out;
}

Image augment(const Image& img, const AugmentationConfig& cfg, Rng& rng) {
  cfg.validate();
  Image out = img;
  const double angle = rng.uniform(cfg.rotation_min_deg, cfg.rotation_max_deg);
  if (angle != 0.0) out = rotate(out, angle);
  const auto max_dy = static_cast<long>(std::floor(cfg.shift_fraction * static_cast<double>(img.height)));
  const auto max_dx = static_cast<long>(std::floor(cfg.shift_fraction * static_cast<double>(img.width)));
  const long dy = static_cast<long>(rng.below(static_cast<std::uint64_t>(2 * max_dy + 1))) - max_dy;
  const long dx = static_cast<long>(rng.below(static_cast<std::uint64_t>(2 * max_dx + 1))) - max_dx;
  if (dy != 0 || dx != 0) out = shift(out, dy, dx);
  if (cfg.horizontal_flip && rng.bernoulli(0.5)) out = flip_horizontal(out);
  if (cfg.vertical_flip && rng.bernoulli(0.5)) out = flip_vertical(out);
  const double factor = rng.uniform(cfg.brightness_min, cfg.brightness_max);
  return adjust_brightness(out, factor);
}

ByteImage to_bytes(const Image& img) {
  ByteImage out;
  out.height = img.height;
  out.width = img.width;
  out.channels = img.channels;
  out.pixels.resize(img.pixels.size());
  for (std::size_t i = 0; i < img.pixels.size(); ++i) {
    const double v = std::clamp(static_cast<double>(img.pixels[i]), 0.0, 1.0);
    out.pixels[i] = static_cast<std::uint8_t>(std::lround(v * 255.0));
  }
  return out;
}

}  // namespace morphnet::gz2
