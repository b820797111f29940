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

// Architectural units built from autodiff primitives: squeeze-and-excitation,
// the two-layer residual unit, MBConv (inverted residual with SE) and the
// classification/regression head.

#include <cstddef>
#include <string>
#include <vector>

#include "autodiff/ops.hpp"

namespace morphnet::nn {

using ad::Parameter;
using ad::Tape;
using ad::Tensor;
using ad::Var;

enum class SEVariant { kFcSigmoid, kPointwise };

/// Outer nonlinearity of the excitation. kRelu swaps the
/// sigmoid for a ReLU, which leaves the scales unbounded.
enum class GateActivation { kSigmoid, kRelu };

struct SEConfig {
  std::size_t channels = 0;
  std::size_t bottleneck = 0;
  SEVariant variant = SEVariant::kFcSigmoid;
  GateActivation gate = GateActivation::kSigmoid;

  /// Bottleneck D / r, with r = 4 giving the default m = D / 4.
  static SEConfig with_reduction(std::size_t channels, std::size_t r = 4);
  void validate() const;
  std::size_t parameter_count() const;
};

template <typename T>
struct SEParams {
  Parameter<T> w1;  // [D, m]
  Parameter<T> b1;  // [m]
  Parameter<T> w2;  // [m, D]
  Parameter<T> b2;  // [D]

  static SEParams init(const SEConfig& cfg, Rng& rng, const std::string& prefix);
  std::vector<Parameter<T>*> parameters();
};

/// Global average pool over the spatial axes: [N, H, W, D] -> [N, D].
template <typename T>
Var se_squeeze(Tape<T>& tape, Var u);

/// s = gate(W2 relu(W1 z)) for z: [N, D]. The pointwise variant runs the
/// same arithmetic as two 1x1 convolutions on an N x 1 x 1 x D tensor.
template <typename T>
Var se_excite(Tape<T>& tape, Var z, const SEConfig& cfg, SEParams<T>& params);

/// Channel-wise rescale of u by s.
template <typename T>
Var se_scale(Tape<T>& tape, Var u, Var s);

template <typename T>
Var se_forward(Tape<T>& tape, Var u, const SEConfig& cfg, SEParams<T>& params);

/// Two same-padded k x k convolutions with an identity skip:
/// out = relu(a + W2 * relu(W1 * a)).
struct ResidualConfig {
  std::size_t channels = 0;
  std::size_t kernel = 3;
  void validate() const;
};

template <typename T>
struct ResidualParams {
  Parameter<T> w1, b1, w2, b2;

  static ResidualParams init(const ResidualConfig& cfg, Rng& rng,
                             const std::string& prefix);
  std::vector<Parameter<T>*> parameters();
};

template <typename T>
Var residual_forward(Tape<T>& tape, Var a, const ResidualConfig& cfg,
                     ResidualParams<T>& params);

struct MBConvConfig {
  std::size_t in_channels = 0;
  std::size_t out_channels = 0;
  std::size_t expansion = 1;
  std::size_t kernel = 3;
  std::size_t stride = 1;
  /// SE bottleneck as a fraction of in_channels (floored, at least 1).
  double se_ratio = 0.25;
  SEVariant se_variant = SEVariant::kFcSigmoid;
  GateActivation gate = GateActivation::kSigmoid;

  std::size_t expanded_channels() const { return in_channels * expansion; }
  bool has_skip() const { return stride == 1 && in_channels == out_channels; }
  SEConfig se_config() const;
  void validate() const;
  std::size_t parameter_count() const;
};

template <typename T>
struct MBConvParams {
  Parameter<T> expand_w, expand_b;  // absent when expansion == 1
  Parameter<T> depthwise_w, depthwise_b;
  SEParams<T> se;
  Parameter<T> project_w, project_b;
  bool has_expand = false;

  static MBConvParams init(const MBConvConfig& cfg, Rng& rng,
                           const std::string& prefix);
  std::vector<Parameter<T>*> parameters();
};

/// Expand -> depthwise -> SE -> linear projection, without the skip.
template <typename T>
Var mbconv_inner(Tape<T>& tape, Var x, const MBConvConfig& cfg,
                 MBConvParams<T>& params);

/// mbconv_inner plus the identity skip when stride is 1 and channels match.
template <typename T>
Var mbconv_forward(Tape<T>& tape, Var x, const MBConvConfig& cfg,
                   MBConvParams<T>& params);

enum class HeadMode { kClassify, kRegress };

struct HeadConfig {
  std::size_t hidden_units = 64;
  double dropout_rate = 0.5;
  HeadMode mode = HeadMode::kClassify;

  static constexpr std::size_t kClasses = 7;
  static constexpr std::size_t kAnswers = 37;

  std::size_t outputs() const {
    return mode == HeadMode::kClassify ? kClasses : kAnswers;
  }
  void validate() const;
};

template <typename T>
struct HeadParams {
  Parameter<T> hidden_w, hidden_b, out_w, out_b;

  static HeadParams init(std::size_t in_channels, const HeadConfig& cfg,
                         Rng& rng, const std::string& prefix);
  std::vector<Parameter<T>*> parameters();
};

/// GAP -> dropout -> dense(hidden) ReLU -> dense(outputs) with softmax
/// (classify) or sigmoid (regress).
template <typename T>
Var head_forward(Tape<T>& tape, Var features, const HeadConfig& cfg,
                 HeadParams<T>& params, bool training, Rng& rng);

}  // namespace morphnet::nn
