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

// Manifest-backed image batches with a one-batch-ahead prefetcher.

#include <cstddef>
#include <cstdint>
#include <future>
#include <optional>
#include <string>
#include <vector>

#include "autodiff/tensor.hpp"
#include "gz2/image.hpp"
#include "gz2/manifest.hpp"
#include "nn/blocks.hpp"

namespace morphnet::train {

enum class CropMode { kCentral, kNone };

struct PreprocessConfig {
  CropMode crop = CropMode::kCentral;
  std::size_t target = 224;
  /// Permit targets other than 224 / 256 (desk-scale runs).
  bool allow_other_target = false;
};

/// crop -> rescale -> resize.
gz2::Image preprocess(const gz2::ByteImage& img, const PreprocessConfig& cfg);

/// Worker cap: MORPHNET_THREADS if set and positive, else the hardware
/// concurrency, at least 1.
std::size_t worker_threads();

struct Batch {
  ad::Tensor<float> inputs;   // [B, H, W, 3]
  ad::Tensor<float> targets;  // [B, 7] one-hot or [B, 37]
  std::vector<int> labels;
  std::vector<std::size_t> indices;  // into the dataset
};

class ImageDataset {
 public:
  /// Relative entry paths resolve against `image_root`.
  ImageDataset(std::vector<gz2::ManifestEntry> entries, std::string image_root,
               PreprocessConfig pre, std::size_t threads = 0);

  std::size_t size() const noexcept { return entries_.size(); }
  const gz2::ManifestEntry& entry(std::size_t i) const { return entries_.at(i); }
  const PreprocessConfig& preprocessing() const noexcept { return pre_; }
  std::string resolve(std::size_t i) const;

  /// Up to `limit` entries whose image file does not exist.
  std::vector<std::string> missing_files(std::size_t limit = 10) const;

  /// Decodes and preprocesses every image once and keeps the result.
  void cache_all();

  gz2::Image load(std::size_t i) const;

  /// Assembles a batch. Augmentation draws from
  /// derive_seed(seed, {epoch, index}), so results do not depend on the
  /// number of workers.
  /// Without a mode the batch carries no targets.
  Batch make_batch(const std::vector<std::size_t>& indices, std::optional<nn::HeadMode> mode,
                   const gz2::AugmentationConfig* augment, std::uint64_t seed,
                   std::size_t epoch) const;

 private:
  std::vector<gz2::ManifestEntry> entries_;
  std::string root_;
  PreprocessConfig pre_;
  std::size_t threads_;
  std::vector<gz2::Image> cache_;
};

/// Throws kNotFound naming the first missing image files, if any.
void require_images(const ImageDataset& data, std::size_t limit = 10);

/// Walks `order` in batches, preparing batch k + 1 while batch k is in use.
class BatchLoader {
 public:
  BatchLoader(const ImageDataset& data, std::vector<std::size_t> order,
              std::size_t batch_size, std::optional<nn::HeadMode> mode,
              std::optional<gz2::AugmentationConfig> augment, std::uint64_t seed,
              std::size_t epoch);
  ~BatchLoader();

  BatchLoader(const BatchLoader&) = delete;
  BatchLoader& operator=(const BatchLoader&) = delete;

  std::optional<Batch> next();

 private:
  std::future<Batch> launch(std::size_t start);

  const ImageDataset& data_;
  std::vector<std::size_t> order_;
  std::size_t batch_size_;
  std::optional<nn::HeadMode> mode_;
  std::optional<gz2::AugmentationConfig> augment_;
  std::uint64_t seed_;
  std::size_t epoch_;
  std::size_t cursor_ = 0;
  std::future<Batch> pending_;
};

}  // namespace morphnet::train
