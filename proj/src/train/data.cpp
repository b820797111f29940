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

#include "train/data.hpp"

#include <algorithm>
#include <cstdlib>
#include <thread>

#include "common/error.hpp"
#include "common/io.hpp"

namespace morphnet::train {
namespace {

/// Runs fn(i) for i in [0, n) on up to `threads` threads.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t threads, Fn fn) {
  threads = std::max<std::size_t>(1, std::min(threads, n));
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(threads);
  for (std::size_t t = 0; t < threads; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < n; i += threads) fn(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

}  // namespace

gz2::Image preprocess(const gz2::ByteImage& img, const PreprocessConfig& cfg) {
  const gz2::ByteImage cropped = cfg.crop == CropMode::kCentral ? gz2::central_crop(img) : img;
  return gz2::rescale_and_resize(cropped, cfg.target, cfg.allow_other_target);
}

std::size_t worker_threads() {
  if (const char* env = std::getenv("MORPHNET_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v > 0) return static_cast<std::size_t>(v);
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

ImageDataset::ImageDataset(std::vector<gz2::ManifestEntry> entries, std::string image_root,
                           PreprocessConfig pre, std::size_t threads)
    : entries_(std::move(entries)),
      root_(std::move(image_root)),
      pre_(pre),
      threads_(threads == 0 ? worker_threads() : threads) {}

std::string ImageDataset::resolve(std::size_t i) const {
  const std::string& p = entries_.at(i).path;
  if (p.empty() || p.front() == '/' || root_.empty()) return p;
  return root_ + "/" + p;
}

std::vector<std::string> ImageDataset::missing_files(std::size_t limit) const {
  std::vector<std::string> out;
  for (std::size_t i = 0; i < entries_.size() && out.size() < limit; ++i) {
    if (!io::file_exists(resolve(i))) out.push_back(resolve(i));
  }
  return out;
}

void require_images(const ImageDataset& data, std::size_t limit) {
  const auto missing = data.missing_files(limit);
  if (missing.empty()) return;
  std::size_t total = 0;
  for (std::size_t i = 0; i < data.size(); ++i) total += io::file_exists(data.resolve(i)) ? 0 : 1;
  std::string list;
  for (const auto& m : missing) list += "\n  " + m;
  fail(ErrorCode::kNotFound, total, " of ", data.size(), " images missing, first:", list);
}

void ImageDataset::cache_all() {
  std::vector<gz2::Image> cache(entries_.size());
  parallel_for(entries_.size(), threads_, [&](std::size_t i) {
    cache[i] = preprocess(gz2::load_image(resolve(i)), pre_);
  });
  cache_ = std::move(cache);
}

gz2::Image ImageDataset::load(std::size_t i) const {
  if (!cache_.empty()) return cache_.at(i);
  return preprocess(gz2::load_image(resolve(i)), pre_);
}

Batch ImageDataset::make_batch(const std::vector<std::size_t>& indices,
                               std::optional<nn::HeadMode> mode,
                               const gz2::AugmentationConfig* augment, std::uint64_t seed,
                               std::size_t epoch) const {
  if (indices.empty()) fail(ErrorCode::kInvalidArgument, "make_batch: empty batch");
  const std::size_t b = indices.size(), s = pre_.target;
  const std::size_t outputs = mode == nn::HeadMode::kClassify ? nn::HeadConfig::kClasses
                                                              : nn::HeadConfig::kAnswers;
  Batch batch;
  batch.inputs = ad::Tensor<float>({b, s, s, 3});
  if (mode) batch.targets = ad::Tensor<float>({b, outputs});
  batch.labels.resize(b);
  batch.indices = indices;
  const std::size_t pixels = s * s * 3;
  parallel_for(b, threads_, [&](std::size_t k) {
    const std::size_t idx = indices[k];
    gz2::Image img = load(idx);
    if (augment) {
      Rng rng(derive_seed(seed, {epoch, idx}));
      img = gz2::augment(img, *augment, rng);
    }
    if (img.pixels.size() != pixels) {
      fail(ErrorCode::kShape, "image ", resolve(idx), " preprocessed to ", img.height, "x",
           img.width, "x", img.channels, ", expected ", s, "x", s, "x3");
    }
    std::copy(img.pixels.begin(), img.pixels.end(), batch.inputs.raw() + k * pixels);
    const gz2::ManifestEntry& e = entries_[idx];
    batch.labels[k] = e.label;
    if (!mode) return;
    float* t = batch.targets.raw() + k * outputs;
    if (*mode == nn::HeadMode::kClassify) {
      if (e.label < 0) {
        fail(ErrorCode::kSchema, "galaxy ", e.galaxy_id, " has no class label");
      }
      t[e.label] = 1.0f;
    } else {
      if (!e.targets) {
        fail(ErrorCode::kSchema, "galaxy ", e.galaxy_id, " has no regression targets");
      }
      std::copy(e.targets->begin(), e.targets->end(), t);
    }
  });
  return batch;
}

BatchLoader::BatchLoader(const ImageDataset& data, std::vector<std::size_t> order,
                         std::size_t batch_size, std::optional<nn::HeadMode> mode,
                         std::optional<gz2::AugmentationConfig> augment, std::uint64_t seed,
                         std::size_t epoch)
    : data_(data),
      order_(std::move(order)),
      batch_size_(batch_size),
      mode_(mode),
      augment_(std::move(augment)),
      seed_(seed),
      epoch_(epoch) {
  if (batch_size_ == 0) fail(ErrorCode::kInvalidArgument, "batch size must be positive");
  if (!order_.empty()) pending_ = launch(0);
}

BatchLoader::~BatchLoader() {
  if (pending_.valid()) pending_.wait();
}

std::future<Batch> BatchLoader::launch(std::size_t start) {
  const std::size_t end = std::min(order_.size(), start + batch_size_);
  std::vector<std::size_t> idx(order_.begin() + static_cast<std::ptrdiff_t>(start),
                               order_.begin() + static_cast<std::ptrdiff_t>(end));
  return std::async(std::launch::async, [this, idx = std::move(idx)] {
    return data_.make_batch(idx, mode_, augment_ ? &*augment_ : nullptr, seed_, epoch_);
  });
}

std::optional<Batch> BatchLoader::next() {
  if (!pending_.valid()) return std::nullopt;
  Batch batch = pending_.get();
  cursor_ += batch.indices.size();
  if (cursor_ < order_.size()) pending_ = launch(cursor_);
  return batch;
}

}  // namespace morphnet::train
