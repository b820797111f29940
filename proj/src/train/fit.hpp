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

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "gz2/manifest.hpp"
#include "scaling/network.hpp"
#include "train/checkpoint.hpp"
#include "train/data.hpp"
#include "train/optim.hpp"

namespace morphnet::train {

enum class LossKind { kCrossEntropy, kRmse };

struct TrainConfig {
  std::size_t epochs = 50;
  std::size_t batch_size = 64;
  double lr = 1.5e-4;
  std::uint64_t seed = 0;
  /// Share of each class in the training split held out for validation.
  double validation_fraction = 0.1;
  std::optional<gz2::AugmentationConfig> augmentation = gz2::AugmentationConfig{};
  PreprocessConfig preprocessing;
  std::size_t plateau_patience = 4;
  double plateau_factor = 0.2;
  double min_lr = 1e-7;
  std::size_t early_stop_patience = 9;
  bool early_stopping = true;
  /// Re-run the fit subset in inference mode each epoch for train metrics.
  bool evaluate_train = true;
  /// Keep decoded images in memory.
  bool cache_images = true;
  std::size_t threads = 0;
  /// Best checkpoint destination; empty keeps it in memory only.
  std::string checkpoint_path;

  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double lr = 0;
  double train_loss = 0;
  double val_loss = 0;
  /// Accuracy (classification) or RMSE (regression), inference mode.
  double train_metric = 0;
  double val_metric = 0;
  bool improved = false;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct FitResult {
  std::vector<EpochRecord> history;
  Checkpoint best;
  std::size_t best_epoch = 0;
  bool stopped_early = false;
  /// Set when a non-finite loss or gradient ended training.
  std::string aborted;
};

/// Stratified seeded hold-out of `fraction` of each label group (at least
/// one per group with two or more members). Returns {fit, validation}
/// indices into `entries`.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> carve_validation(
    const std::vector<gz2::ManifestEntry>& entries, double fraction, std::uint64_t seed);

/// Trains on the manifest's train split with Adam, plateau decay and early
/// stopping; the best validation-loss state is returned and, if configured,
/// saved.
FitResult fit(scaling::Network<float>& net, const gz2::DatasetManifest& manifest,
              const std::string& image_root, LossKind loss, const TrainConfig& cfg,
              const std::function<void(const EpochRecord&)>& on_epoch = {});

/// Forward pass in inference mode over `indices`; returns [n, outputs].
std::vector<std::vector<float>> predict(scaling::Network<float>& net, const ImageDataset& data,
                                        const std::vector<std::size_t>& indices,
                                        std::size_t batch_size);

std::string format_history_csv(const std::vector<EpochRecord>& history);

}  // namespace morphnet::train
