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

#include "nn/blocks.hpp"

#include <algorithm>
#include <cmath>

namespace morphnet::nn {
namespace {

template <typename T>
Parameter<T> weight(const std::string& name, ad::Shape shape,
                    std::size_t fan_in, Rng& rng) {
  return Parameter<T>(name, ad::he_init<T>(shape, fan_in, rng));
}

template <typename T>
Parameter<T> zeros(const std::string& name, ad::Shape shape) {
  return Parameter<T>(name, Tensor<T>(std::move(shape)));
}

}  // namespace

SEConfig SEConfig::with_reduction(std::size_t channels, std::size_t r) {
  SEConfig cfg;
  cfg.channels = channels;
  cfg.bottleneck = std::max<std::size_t>(1, r == 0 ? channels : channels / r);
  return cfg;
}

void SEConfig::validate() const {
  if (channels == 0 || bottleneck == 0 || bottleneck > channels) {
    fail(ErrorCode::kInvalidArgument, "SE bottleneck must satisfy 1 <= m <= D, got D=",
         channels, " m=", bottleneck);
  }
}

std::size_t SEConfig::parameter_count() const {
  return channels * bottleneck + bottleneck + bottleneck * channels + channels;
}

template <typename T>
SEParams<T> SEParams<T>::init(const SEConfig& cfg, Rng& rng,
                              const std::string& prefix) {
  cfg.validate();
  const std::size_t d = cfg.channels, m = cfg.bottleneck;
  SEParams p;
  p.w1 = weight<T>(prefix + ".se.w1", {d, m}, d, rng);
  p.b1 = zeros<T>(prefix + ".se.b1", {m});
  p.w2 = weight<T>(prefix + ".se.w2", {m, d}, m, rng);
  p.b2 = zeros<T>(prefix + ".se.b2", {d});
  return p;
}

template <typename T>
std::vector<Parameter<T>*> SEParams<T>::parameters() {
  return {&w1, &b1, &w2, &b2};
}

template <typename T>
Var se_squeeze(Tape<T>& tape, Var u) {
  return ad::global_avg_pool(tape, u);
}

template <typename T>
Var se_excite(Tape<T>& tape, Var z, const SEConfig& cfg, SEParams<T>& params) {
  cfg.validate();
  const auto& zv = tape.value(z);
  if (zv.rank() != 2 || zv.dim(1) != cfg.channels) {
    fail(ErrorCode::kShape, "se_excite: expected [N, ", cfg.channels, "], got ",
         ad::shape_string(zv.shape()));
  }
  if (params.w1.value.shape() != ad::Shape{cfg.channels, cfg.bottleneck} ||
      params.w2.value.shape() != ad::Shape{cfg.bottleneck, cfg.channels}) {
    fail(ErrorCode::kShape, "se_excite: weights ",
         ad::shape_string(params.w1.value.shape()), " / ",
         ad::shape_string(params.w2.value.shape()), " do not match D=",
         cfg.channels, " m=", cfg.bottleneck);
  }
  const std::size_t n = zv.dim(0), d = cfg.channels, m = cfg.bottleneck;
  Var w1 = tape.param(params.w1);
  Var b1 = tape.param(params.b1);
  Var w2 = tape.param(params.w2);
  Var b2 = tape.param(params.b2);

  Var pre_gate;
  if (cfg.variant == SEVariant::kFcSigmoid) {
    Var hidden = ad::dense(tape, z, w1, b1, ad::Activation::kRelu);
    pre_gate = ad::dense(tape, hidden, w2, b2);
  } else {
    Var z4 = ad::reshape(tape, z, {n, 1, 1, d});
    Var k1 = ad::reshape(tape, w1, {1, 1, d, m});
    Var k2 = ad::reshape(tape, w2, {1, 1, m, d});
    Var hidden = ad::relu(tape, ad::pointwise_conv(tape, z4, k1, b1));
    Var out = ad::pointwise_conv(tape, hidden, k2, b2);
    pre_gate = ad::reshape(tape, out, {n, d});
  }
  return cfg.gate == GateActivation::kSigmoid ? ad::sigmoid(tape, pre_gate)
                                              : ad::relu(tape, pre_gate);
}

template <typename T>
Var se_scale(Tape<T>& tape, Var u, Var s) {
  return ad::channel_scale(tape, u, s);
}

template <typename T>
Var se_forward(Tape<T>& tape, Var u, const SEConfig& cfg, SEParams<T>& params) {
  Var z = se_squeeze(tape, u);
  Var s = se_excite(tape, z, cfg, params);
  return se_scale(tape, u, s);
}

void ResidualConfig::validate() const {
  if (channels == 0 || kernel % 2 == 0) {
    fail(ErrorCode::kInvalidArgument, "residual block needs channels >= 1 and an odd kernel");
  }
}

template <typename T>
ResidualParams<T> ResidualParams<T>::init(const ResidualConfig& cfg, Rng& rng,
                                          const std::string& prefix) {
  cfg.validate();
  const std::size_t c = cfg.channels, k = cfg.kernel;
  ResidualParams p;
  p.w1 = weight<T>(prefix + ".w1", {k, k, c, c}, k * k * c, rng);
  p.b1 = zeros<T>(prefix + ".b1", {c});
  p.w2 = weight<T>(prefix + ".w2", {k, k, c, c}, k * k * c, rng);
  p.b2 = zeros<T>(prefix + ".b2", {c});
  return p;
}

template <typename T>
std::vector<Parameter<T>*> ResidualParams<T>::parameters() {
  return {&w1, &b1, &w2, &b2};
}

template <typename T>
Var residual_forward(Tape<T>& tape, Var a, const ResidualConfig& cfg,
                     ResidualParams<T>& params) {
  cfg.validate();
  Var h = ad::conv2d(tape, a, tape.param(params.w1), tape.param(params.b1), 1,
                     ad::Padding::kSame);
  h = ad::relu(tape, h);
  Var f = ad::conv2d(tape, h, tape.param(params.w2), tape.param(params.b2), 1,
                     ad::Padding::kSame);
  if (tape.value(f).shape() != tape.value(a).shape()) {
    fail(ErrorCode::kShape, "residual_forward: skip ",
         ad::shape_string(tape.value(a).shape()), " vs inner path ",
         ad::shape_string(tape.value(f).shape()));
  }
  return ad::relu(tape, ad::add(tape, a, f));
}

SEConfig MBConvConfig::se_config() const {
  SEConfig se;
  se.channels = expanded_channels();
  se.bottleneck = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::floor(static_cast<double>(in_channels) * se_ratio)));
  se.bottleneck = std::min(se.bottleneck, se.channels);
  se.variant = se_variant;
  se.gate = gate;
  return se;
}

void MBConvConfig::validate() const {
  if (in_channels == 0 || out_channels == 0 || expansion == 0) {
    fail(ErrorCode::kInvalidArgument, "MBConv channels and expansion must be positive");
  }
  if (kernel % 2 == 0) {
    fail(ErrorCode::kInvalidArgument, "MBConv kernel must be odd, got ", kernel);
  }
  if (stride != 1 && stride != 2) {
    fail(ErrorCode::kInvalidArgument, "MBConv stride must be 1 or 2, got ", stride);
  }
  if (!(se_ratio > 0.0 && se_ratio <= 1.0)) {
    fail(ErrorCode::kInvalidArgument, "MBConv se_ratio must be in (0, 1]");
  }
}

std::size_t MBConvConfig::parameter_count() const {
  const std::size_t e = expanded_channels();
  std::size_t count = 0;
  if (expansion != 1) count += in_channels * e + e;
  count += kernel * kernel * e + e;
  count += se_config().parameter_count();
  count += e * out_channels + out_channels;
  return count;
}

template <typename T>
MBConvParams<T> MBConvParams<T>::init(const MBConvConfig& cfg, Rng& rng,
                                      const std::string& prefix) {
  cfg.validate();
  const std::size_t in = cfg.in_channels, e = cfg.expanded_channels();
  const std::size_t k = cfg.kernel;
  MBConvParams p;
  p.has_expand = cfg.expansion != 1;
  if (p.has_expand) {
    p.expand_w = weight<T>(prefix + ".expand.w", {1, 1, in, e}, in, rng);
    p.expand_b = zeros<T>(prefix + ".expand.b", {e});
  }
  p.depthwise_w = weight<T>(prefix + ".dw.w", {k, k, e}, k * k, rng);
  p.depthwise_b = zeros<T>(prefix + ".dw.b", {e});
  p.se = SEParams<T>::init(cfg.se_config(), rng, prefix);
  p.project_w = weight<T>(prefix + ".project.w", {1, 1, e, cfg.out_channels}, e, rng);
  p.project_b = zeros<T>(prefix + ".project.b", {cfg.out_channels});
  return p;
}

template <typename T>
std::vector<Parameter<T>*> MBConvParams<T>::parameters() {
  std::vector<Parameter<T>*> out;
  if (has_expand) {
    out.push_back(&expand_w);
    out.push_back(&expand_b);
  }
  out.push_back(&depthwise_w);
  out.push_back(&depthwise_b);
  for (Parameter<T>* p : se.parameters()) out.push_back(p);
  out.push_back(&project_w);
  out.push_back(&project_b);
  return out;
}

template <typename T>
Var mbconv_inner(Tape<T>& tape, Var x, const MBConvConfig& cfg,
                 MBConvParams<T>& params) {
  cfg.validate();
  const auto& xv = tape.value(x);
  if (xv.rank() != 4 || xv.dim(3) != cfg.in_channels) {
    fail(ErrorCode::kShape, "mbconv: expected ", cfg.in_channels,
         " input channels, got ", ad::shape_string(xv.shape()));
  }
  Var h = x;
  if (params.has_expand) {
    h = ad::pointwise_conv(tape, h, tape.param(params.expand_w),
                           tape.param(params.expand_b));
    h = ad::relu(tape, h);
  }
  h = ad::depthwise_conv2d(tape, h, tape.param(params.depthwise_w),
                           tape.param(params.depthwise_b), cfg.stride,
                           ad::Padding::kSame);
  h = ad::relu(tape, h);
  h = se_forward(tape, h, cfg.se_config(), params.se);
  return ad::pointwise_conv(tape, h, tape.param(params.project_w),
                            tape.param(params.project_b));
}

template <typename T>
Var mbconv_forward(Tape<T>& tape, Var x, const MBConvConfig& cfg,
                   MBConvParams<T>& params) {
  Var inner = mbconv_inner(tape, x, cfg, params);
  return cfg.has_skip() ? ad::add(tape, x, inner) : inner;
}

void HeadConfig::validate() const {
  if (hidden_units == 0) fail(ErrorCode::kInvalidArgument, "head needs hidden_units >= 1");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) {
    fail(ErrorCode::kInvalidArgument, "head dropout must be in [0, 1)");
  }
}

template <typename T>
HeadParams<T> HeadParams<T>::init(std::size_t in_channels, const HeadConfig& cfg,
                                  Rng& rng, const std::string& prefix) {
  cfg.validate();
  const std::size_t h = cfg.hidden_units, o = cfg.outputs();
  HeadParams p;
  p.hidden_w = weight<T>(prefix + ".fc1.w", {in_channels, h}, in_channels, rng);
  p.hidden_b = zeros<T>(prefix + ".fc1.b", {h});
  p.out_w = weight<T>(prefix + ".fc2.w", {h, o}, h, rng);
  p.out_b = zeros<T>(prefix + ".fc2.b", {o});
  return p;
}

template <typename T>
std::vector<Parameter<T>*> HeadParams<T>::parameters() {
  return {&hidden_w, &hidden_b, &out_w, &out_b};
}

template <typename T>
Var head_forward(Tape<T>& tape, Var features, const HeadConfig& cfg,
                 HeadParams<T>& params, bool training, Rng& rng) {
  cfg.validate();
  const auto& fv = tape.value(features);
  if (fv.rank() != 4 || fv.dim(3) != params.hidden_w.value.dim(0)) {
    fail(ErrorCode::kShape, "head: features ", ad::shape_string(fv.shape()),
         " do not match head input width ", params.hidden_w.value.dim(0));
  }
  if (params.out_w.value.dim(1) != cfg.outputs()) {
    fail(ErrorCode::kShape, "head: output layer has ", params.out_w.value.dim(1),
         " units, mode needs ", cfg.outputs());
  }
  Var pooled = ad::global_avg_pool(tape, features);
  Var dropped = ad::dropout(tape, pooled, cfg.dropout_rate, training, rng);
  Var hidden = ad::dense(tape, dropped, tape.param(params.hidden_w),
                         tape.param(params.hidden_b), ad::Activation::kRelu);
  const ad::Activation out_act = cfg.mode == HeadMode::kClassify
                                     ? ad::Activation::kSoftmax
                                     : ad::Activation::kSigmoid;
  return ad::dense(tape, hidden, tape.param(params.out_w),
                   tape.param(params.out_b), out_act);
}

#define MORPHNET_INSTANTIATE_BLOCKS(T)                                         \
  template struct SEParams<T>;                                                 \
  template struct ResidualParams<T>;                                           \
  template struct MBConvParams<T>;                                             \
  template struct HeadParams<T>;                                               \
  template Var se_squeeze<T>(Tape<T>&, Var);                                   \
  template Var se_excite<T>(Tape<T>&, Var, const SEConfig&, SEParams<T>&);     \
  template Var se_scale<T>(Tape<T>&, Var, Var);                                \
  template Var se_forward<T>(Tape<T>&, Var, const SEConfig&, SEParams<T>&);    \
  template Var residual_forward<T>(Tape<T>&, Var, const ResidualConfig&,       \
                                   ResidualParams<T>&);                        \
  template Var mbconv_inner<T>(Tape<T>&, Var, const MBConvConfig&,             \
                               MBConvParams<T>&);                              \
  template Var mbconv_forward<T>(Tape<T>&, Var, const MBConvConfig&,           \
                                 MBConvParams<T>&);                            \
  template Var head_forward<T>(Tape<T>&, Var, const HeadConfig&,               \
                               HeadParams<T>&, bool, Rng&);

MORPHNET_INSTANTIATE_BLOCKS(float)
MORPHNET_INSTANTIATE_BLOCKS(double)

}  // namespace morphnet::nn
