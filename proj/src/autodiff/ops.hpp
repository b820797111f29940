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

// Differentiable primitives. Every function records one node on the tape and
// returns its handle; spatial ops take N x H x W x C activations.

#include <cstddef>
#include <optional>

#include "autodiff/tape.hpp"
#include "common/rng.hpp"

namespace morphnet::ad {

enum class Padding { kSame, kValid };

enum class Activation { kIdentity, kRelu, kSigmoid, kSoftmax };

/// Lower clamp applied to probabilities inside cross_entropy.
inline constexpr double kProbabilityClamp = 1e-7;

/// Zero-mean normal draws with standard deviation sqrt(2 / fan_in).
template <typename T>
Tensor<T> he_init(const Shape& shape, std::size_t fan_in, Rng& rng);

template <typename T>
Var add(Tape<T>& tape, Var a, Var b);
template <typename T>
Var mul(Tape<T>& tape, Var a, Var b);
template <typename T>
Var scale(Tape<T>& tape, Var a, T factor);
template <typename T>
Var square(Tape<T>& tape, Var a);
template <typename T>
Var sum(Tape<T>& tape, Var a);
template <typename T>
Var mean(Tape<T>& tape, Var a);
/// sum_i weights[i] * a[i]; a fixed random projection turns any tensor
/// into a scalar loss for gradient checking.
template <typename T>
Var weighted_sum(Tape<T>& tape, Var a, const Tensor<T>& weights);
template <typename T>
Var reshape(Tape<T>& tape, Var a, Shape shape);

template <typename T>
Var relu(Tape<T>& tape, Var a);
template <typename T>
Var sigmoid(Tape<T>& tape, Var a);
/// Exp-normalize over the last axis, max-subtracted.
template <typename T>
Var softmax(Tape<T>& tape, Var a);
template <typename T>
Var activate(Tape<T>& tape, Var a, Activation act);

/// x: [N, in] or [in]; weights: [in, out]; bias: [out].
template <typename T>
Var dense(Tape<T>& tape, Var x, Var weights, Var bias,
          Activation act = Activation::kIdentity);

/// Cross-correlation. kernel: [k, k, C_in, C_out]; bias: [C_out].
template <typename T>
Var conv2d(Tape<T>& tape, Var x, Var kernel, std::optional<Var> bias,
           std::size_t stride, Padding padding);

/// Per-channel spatial filter. kernel: [k, k, C]; bias: [C].
template <typename T>
Var depthwise_conv2d(Tape<T>& tape, Var x, Var kernel,
                     std::optional<Var> bias, std::size_t stride,
                     Padding padding);

/// 1x1 convolution. kernel: [1, 1, C_in, C_out]; bias: [C_out].
template <typename T>
Var pointwise_conv(Tape<T>& tape, Var x, Var kernel, std::optional<Var> bias);

/// [N, H, W, C] -> [N, C].
template <typename T>
Var global_avg_pool(Tape<T>& tape, Var x);

/// Valid-padded window maximum; ties route gradient to the first index in
/// scan order.
template <typename T>
Var max_pool(Tape<T>& tape, Var x, std::size_t window, std::size_t stride);

/// x: [N, H, W, C], s: [N, C] -> x[n, :, :, c] * s[n, c].
template <typename T>
Var channel_scale(Tape<T>& tape, Var x, Var s);

/// Inverted dropout. Inference mode and rate 0 are identities.
template <typename T>
Var dropout(Tape<T>& tape, Var x, double rate, bool training, Rng& rng);

/// Batch mean of -sum_k y_k log(clamp(p_k)). pred, target: [N, K] or [K].
template <typename T>
Var cross_entropy(Tape<T>& tape, Var pred, Var target);

template <typename T>
Var mean_squared_error(Tape<T>& tape, Var pred, Var target);

/// sqrt(mean_squared_error); the root is taken with a 1e-12 floor inside.
template <typename T>
Var rmse_loss(Tape<T>& tape, Var pred, Var target);

/// Spatial output extent for a given input extent, kernel and padding.
std::size_t conv_output_extent(std::size_t input, std::size_t kernel,
                               std::size_t stride, Padding padding);

}  // namespace morphnet::ad
