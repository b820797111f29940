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

// Binary checkpoint container:
//   "MNET" | u32 version | u32 descriptor length | descriptor bytes |
//   u32 tensor count | per tensor: u32 name length, name, u32 rank,
//   u32 extents..., float32 values | u64 FNV-1a of everything before it.
// Integers and floats are little-endian. The descriptor is the architecture
// text followed by `state.<key> = <value>` lines.

#include <cstdint>
#include <map>
#include <string>
#include <string_view>
#include <vector>

#include "autodiff/tensor.hpp"
#include "scaling/network.hpp"
#include "train/optim.hpp"

namespace morphnet::train {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedTensor {
  std::string name;
  ad::Tensor<float> value;

  friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

struct TrainState {
  std::uint64_t epoch = 0;
  double best_val_loss = 0.0;
  std::uint64_t adam_step = 0;
  double lr = 0.0;
  std::uint64_t seed = 0;

  friend bool operator==(const TrainState&, const TrainState&) = default;
};

struct Checkpoint {
  std::string arch_text;
  TrainState state;
  /// Network parameters, then opt.m.<name> and opt.v.<name> when present.
  std::vector<NamedTensor> tensors;

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

std::string serialize_checkpoint(const Checkpoint& c);
/// Throws kIntegrity on bad magic, truncation, trailing bytes or checksum
/// mismatch, and kSchema on an unsupported version.
Checkpoint deserialize_checkpoint(std::string_view bytes);

/// Atomic write (temporary file, then rename).
void save_checkpoint(const std::string& path, const Checkpoint& c);
Checkpoint load_checkpoint(const std::string& path);

std::uint64_t fnv1a64(std::string_view bytes);

Checkpoint capture(scaling::Network<float>& net, Adam<float>* adam, const TrainState& state);

/// Copies parameter values (and optimizer moments when `adam` is given) into
/// `net`. Missing or mis-shaped tensors throw kIntegrity.
void restore(const Checkpoint& c, scaling::Network<float>& net, Adam<float>* adam = nullptr);

}  // namespace morphnet::train
