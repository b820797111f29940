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

// Flat `section.key = value` run configuration shared by every command.

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "gz2/image.hpp"
#include "nn/blocks.hpp"
#include "scaling/arch.hpp"
#include "train/data.hpp"

namespace morphnet::app {

struct RunConfig {
  std::uint64_t seed = 0;

  std::string catalog;
  std::string image_dir;
  std::string manifest;
  std::string checkpoint_dir;
  std::string rules;  // empty selects the built-in rule set

  std::string variant = "b0";  // b0..b7, toy, or scaled
  nn::HeadMode mode = nn::HeadMode::kClassify;
  std::string se_gate;  // empty keeps the architecture's setting
  std::string se_variant;
  scaling::ScalingCoefficients scaling;  // used by variant "scaled"

  std::size_t epochs = 50;
  std::size_t batch_size = 0;  // 0 selects the preset's batch size
  double lr = 1.5e-4;
  double validation_fraction = 0.1;
  std::size_t plateau_patience = 4;
  double plateau_factor = 0.2;
  double min_lr = 1e-7;
  std::size_t early_stop_patience = 9;
  bool early_stopping = true;
  bool cache_images = true;
  std::size_t threads = 0;

  bool augment = true;
  gz2::AugmentationConfig augmentation;

  train::CropMode crop = train::CropMode::kCentral;
  std::size_t target = 0;  // 0 follows the architecture's resolution

  bool or_mode_class6 = false;
  std::string image_ext = "jpg";
  std::size_t split_train = 9;
  std::size_t split_test = 1;

  std::size_t featmap_channels = 16;
  std::size_t featmap_columns = 4;

  /// Unknown keys and unparsable values throw kConfiguration.
  void set(std::string_view key, std::string_view value);
  std::string get(std::string_view key) const;
  /// Applies every `key = value` line; '#' starts a comment.
  void load_text(std::string_view text);
  void load_file(const std::string& path);
  /// Every key with its current value, in key order.
  std::string format() const;

  static std::vector<std::string> keys();
};

}  // namespace morphnet::app
