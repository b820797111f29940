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

// Staged architecture descriptions and compound scaling of depth, width and
// input resolution.

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "nn/blocks.hpp"

namespace morphnet::scaling {

enum class BlockKind { kConv, kMBConv };

struct StageSpec {
  BlockKind kind = BlockKind::kMBConv;
  std::size_t kernel = 3;
  std::size_t stride = 1;
  std::size_t channels = 0;
  std::size_t layers = 1;
  std::size_t expansion = 1;
  /// Layer count is not scaled (stem and top convolutions).
  bool fixed_depth = false;

  friend bool operator==(const StageSpec&, const StageSpec&) = default;
};

struct ScalingCoefficients {
  double alpha = 1.2;
  double beta = 1.1;
  double gamma = 1.15;
  double phi = 0.0;

  void validate() const;
};

struct ScaledArch {
  std::string name = "custom";
  std::size_t resolution = 224;
  std::size_t input_channels = 3;
  double se_ratio = 0.25;
  nn::SEVariant se_variant = nn::SEVariant::kFcSigmoid;
  nn::GateActivation se_gate = nn::GateActivation::kSigmoid;
  nn::HeadConfig head;
  std::vector<StageSpec> stages;

  void validate() const;
  /// Product of first-layer strides: smallest input that keeps every
  /// spatial extent at least 1 without collapsing below it.
  std::size_t stride_product() const;
  std::size_t final_channels() const;

  friend bool operator==(const ScaledArch& a, const ScaledArch& b);
};

inline constexpr std::size_t kChannelUnit = 8;

/// alpha * beta^2 * gamma^2 - 2. Coefficients below 1 are rejected.
double check_constraint(const ScalingCoefficients& c);

/// Nearest multiple of the unit (halves round up), never below the unit.
std::size_t round_channels(double channels, std::size_t unit = kChannelUnit);

/// Scaled layer count: max(L, round_half_up(d * L)).
std::size_t scale_depth(std::size_t layers, double depth_multiplier);

ScaledArch scale_arch(const ScaledArch& baseline, const ScalingCoefficients& c);

/// 2 x multiply-accumulates over every convolution, depthwise, SE and dense
/// layer, including the head. Biases and activations are not counted.
double estimate_flops(const ScaledArch& arch);

/// Text schema: `key = value` lines and ordered `stage = ...` records.
std::string format_arch(const ScaledArch& arch);
ScaledArch parse_arch(std::string_view text);

ScaledArch baseline_arch();
ScaledArch toy_arch();

/// "b0" .. "b7" (phi = index, default coefficients, input 224 for b0-b3 and
/// 256 for b4-b7) or "toy".
ScaledArch preset(std::string_view name);
std::vector<std::string> preset_names();

/// Batch sizes per preset: 256 for b0-b1, 128 for b2-b3, 64 for b4-b7 and
/// 16 for the toy preset.
std::size_t preset_batch_size(std::string_view name);

std::string_view block_kind_name(BlockKind kind);

}  // namespace morphnet::scaling
