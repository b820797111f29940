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

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "nn/blocks.hpp"
#include "scaling/arch.hpp"

namespace morphnet::scaling {

using ad::Parameter;
using ad::Tape;
using ad::Var;

/// Named intermediate activations recorded during a forward pass.
using Captures = std::vector<std::pair<std::string, Var>>;

/// Stem conv, MBConv stages, top conv and head, instantiated from a
/// ScaledArch. Layers are named "stage<i>.layer<j>".
template <typename T>
class Network {
 public:
  Network(ScaledArch arch, std::uint64_t seed);

  const ScaledArch& arch() const noexcept { return arch_; }

  /// x: [N, H, W, input_channels]. Returns [N, outputs] probabilities.
  Var forward(Tape<T>& tape, Var x, bool training, Rng& rng,
              Captures* captures = nullptr);

  std::vector<Parameter<T>*> parameters();
  Parameter<T>* find_parameter(const std::string& name);
  std::size_t parameter_count();
  std::vector<std::string> layer_names() const;

 private:
  struct Layer {
    std::string name;
    BlockKind kind = BlockKind::kConv;
    std::size_t stride = 1;
    Parameter<T> conv_w, conv_b;
    nn::MBConvConfig mb_cfg;
    nn::MBConvParams<T> mb;
  };

  ScaledArch arch_;
  std::vector<Layer> layers_;
  nn::HeadParams<T> head_;
};

extern template class Network<float>;
extern template class Network<double>;

}  // namespace morphnet::scaling
