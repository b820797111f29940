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

#include "scaling/network.hpp"

#include "autodiff/ops.hpp"

namespace morphnet::scaling {

template <typename T>
Network<T>::Network(ScaledArch arch, std::uint64_t seed) : arch_(std::move(arch)) {
  arch_.validate();
  Rng rng(seed);
  std::size_t cin = arch_.input_channels;
  for (std::size_t si = 0; si < arch_.stages.size(); ++si) {
    const StageSpec& s = arch_.stages[si];
    for (std::size_t li = 0; li < s.layers; ++li) {
      Layer layer;
      layer.name = "stage" + std::to_string(si) + ".layer" + std::to_string(li);
      layer.kind = s.kind;
      layer.stride = li == 0 ? s.stride : 1;
      if (s.kind == BlockKind::kConv) {
        const std::size_t k = s.kernel;
        layer.conv_w = Parameter<T>(layer.name + ".w",
                                    ad::he_init<T>({k, k, cin, s.channels}, k * k * cin, rng));
        layer.conv_b = Parameter<T>(layer.name + ".b", ad::Tensor<T>({s.channels}));
      } else {
        nn::MBConvConfig cfg;
        cfg.in_channels = cin;
        cfg.out_channels = s.channels;
        cfg.expansion = s.expansion;
        cfg.kernel = s.kernel;
        cfg.stride = layer.stride;
        cfg.se_ratio = arch_.se_ratio;
        cfg.se_variant = arch_.se_variant;
        cfg.gate = arch_.se_gate;
        layer.mb_cfg = cfg;
        layer.mb = nn::MBConvParams<T>::init(cfg, rng, layer.name);
      }
      layers_.push_back(std::move(layer));
      cin = s.channels;
    }
  }
  head_ = nn::HeadParams<T>::init(cin, arch_.head, rng, "head");
}

template <typename T>
Var Network<T>::forward(Tape<T>& tape, Var x, bool training, Rng& rng,
                        Captures* captures) {
  const auto& xv = tape.value(x);
  if (xv.rank() != 4 || xv.dim(3) != arch_.input_channels) {
    fail(ErrorCode::kShape, "network expects [N, H, W, ", arch_.input_channels,
         "] input, got ", ad::shape_string(xv.shape()));
  }
  Var h = x;
  for (Layer& layer : layers_) {
    if (layer.kind == BlockKind::kConv) {
      h = ad::conv2d(tape, h, tape.param(layer.conv_w), tape.param(layer.conv_b),
                     layer.stride, ad::Padding::kSame);
      h = ad::relu(tape, h);
    } else {
      h = nn::mbconv_forward(tape, h, layer.mb_cfg, layer.mb);
    }
    if (captures) captures->emplace_back(layer.name, h);
  }
  return nn::head_forward(tape, h, arch_.head, head_, training, rng);
}

template <typename T>
std::vector<Parameter<T>*> Network<T>::parameters() {
  std::vector<Parameter<T>*> out;
  for (Layer& layer : layers_) {
    if (layer.kind == BlockKind::kConv) {
      out.push_back(&layer.conv_w);
      out.push_back(&layer.conv_b);
    } else {
      for (Parameter<T>* p : layer.mb.parameters()) out.push_back(p);
    }
  }
  for (Parameter<T>* p : head_.parameters()) out.push_back(p);
  return out;
}

template <typename T>
Parameter<T>* Network<T>::find_parameter(const std::string& name) {
  for (Parameter<T>* p : parameters()) {
    if (p->name == name) return p;
  }
  return nullptr;
}

template <typename T>
std::size_t Network<T>::parameter_count() {
  std::size_t n = 0;
  for (Parameter<T>* p : parameters()) n += p->value.size();
  return n;
}

template <typename T>
std::vector<std::string> Network<T>::layer_names() const {
  std::vector<std::string> out;
  for (const Layer& layer : layers_) out.push_back(layer.name);
  return out;
}

template class Network<float>;
template class Network<double>;

}  // namespace morphnet::scaling
