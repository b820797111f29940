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

#include "scaling/arch.hpp"

#include <cmath>
#include <map>
#include <sstream>

#include "common/resources.hpp"
#include "common/text.hpp"

namespace morphnet::scaling {
namespace {

constexpr int kSchemaVersion = 1;

std::string format_double(double v) { return text::format_real(v); }

std::size_t parse_size(std::string_view key, std::string_view value) {
  std::size_t out = 0;
  if (!text::parse_number(value, out)) {
    fail(ErrorCode::kSchema, "arch: '", key, "' expects a non-negative integer, got '",
         value, "'");
  }
  return out;
}

double parse_real(std::string_view key, std::string_view value) {
  double out = 0;
  if (!text::parse_number(value, out)) {
    fail(ErrorCode::kSchema, "arch: '", key, "' expects a number, got '", value, "'");
  }
  return out;
}

StageSpec parse_stage(std::string_view value) {
  const auto tokens = text::split_ws(value);
  if (tokens.empty()) fail(ErrorCode::kSchema, "arch: empty stage record");
  StageSpec s;
  if (tokens[0] == "conv") {
    s.kind = BlockKind::kConv;
  } else if (tokens[0] == "mbconv") {
    s.kind = BlockKind::kMBConv;
  } else {
    fail(ErrorCode::kSchema, "arch: unknown block kind '", tokens[0], "'");
  }
  bool seen_channels = false;
  for (std::size_t i = 1; i < tokens.size(); ++i) {
    const auto eq = tokens[i].find('=');
    if (eq == std::string_view::npos) {
      fail(ErrorCode::kSchema, "arch: stage field '", tokens[i], "' is not key=value");
    }
    const std::string_view k = tokens[i].substr(0, eq);
    const std::string_view v = tokens[i].substr(eq + 1);
    if (k == "kernel") {
      s.kernel = parse_size(k, v);
    } else if (k == "stride") {
      s.stride = parse_size(k, v);
    } else if (k == "channels") {
      s.channels = parse_size(k, v);
      seen_channels = true;
    } else if (k == "layers") {
      s.layers = parse_size(k, v);
    } else if (k == "expansion") {
      s.expansion = parse_size(k, v);
    } else if (k == "depth") {
      if (v == "fixed") {
        s.fixed_depth = true;
      } else if (v == "scaled") {
        s.fixed_depth = false;
      } else {
        fail(ErrorCode::kSchema, "arch: depth must be fixed or scaled, got '", v, "'");
      }
    } else {
      fail(ErrorCode::kSchema, "arch: unknown stage field '", k, "'");
    }
  }
  if (!seen_channels) fail(ErrorCode::kSchema, "arch: stage without channels");
  return s;
}

}  // namespace

void ScalingCoefficients::validate() const {
  if (!(alpha >= 1.0) || !(beta >= 1.0) || !(gamma >= 1.0)) {
    fail(ErrorCode::kInvalidArgument, "scaling coefficients must be >= 1, got alpha=",
         alpha, " beta=", beta, " gamma=", gamma);
  }
  if (!(phi >= 0.0) || !std::isfinite(phi)) {
    fail(ErrorCode::kInvalidArgument, "phi must be a finite non-negative number, got ",
         phi);
  }
}

void ScaledArch::validate() const {
  if (stages.empty()) fail(ErrorCode::kInvalidArgument, "arch '", name, "' has no stages");
  if (stages.front().kind != BlockKind::kConv) {
    fail(ErrorCode::kInvalidArgument, "arch '", name, "' must start with a conv stem");
  }
  if (input_channels == 0) fail(ErrorCode::kInvalidArgument, "input_channels must be >= 1");
  if (!(se_ratio > 0.0 && se_ratio <= 1.0)) {
    fail(ErrorCode::kInvalidArgument, "se_ratio must be in (0, 1]");
  }
  for (std::size_t i = 0; i < stages.size(); ++i) {
    const StageSpec& s = stages[i];
    if (s.layers == 0 || s.channels == 0 || s.expansion == 0 || s.stride == 0 ||
        s.kernel % 2 == 0) {
      fail(ErrorCode::kInvalidArgument, "arch '", name, "' stage ", i,
           ": layers, channels, expansion, stride must be positive and kernel odd");
    }
    if (s.kind == BlockKind::kMBConv && s.stride > 2) {
      fail(ErrorCode::kInvalidArgument, "arch '", name, "' stage ", i,
           ": MBConv stride must be 1 or 2");
    }
  }
  head.validate();
  if (resolution < stride_product()) {
    fail(ErrorCode::kInvalidArgument, "arch '", name, "': resolution ", resolution,
         " is below the minimum ", stride_product());
  }
}

std::size_t ScaledArch::stride_product() const {
  std::size_t p = 1;
  for (const StageSpec& s : stages) p *= s.stride;
  return p;
}

std::size_t ScaledArch::final_channels() const {
  return stages.empty() ? input_channels : stages.back().channels;
}

bool operator==(const ScaledArch& a, const ScaledArch& b) {
  return a.name == b.name && a.resolution == b.resolution &&
         a.input_channels == b.input_channels && a.se_ratio == b.se_ratio &&
         a.se_variant == b.se_variant && a.se_gate == b.se_gate &&
         a.head.hidden_units == b.head.hidden_units &&
         a.head.dropout_rate == b.head.dropout_rate && a.head.mode == b.head.mode &&
         a.stages == b.stages;
}

double check_constraint(const ScalingCoefficients& c) {
  c.validate();
  return c.alpha * c.beta * c.beta * c.gamma * c.gamma - 2.0;
}

std::size_t round_channels(double channels, std::size_t unit) {
  if (unit == 0) fail(ErrorCode::kInvalidArgument, "channel unit must be positive");
  const double u = static_cast<double>(unit);
  const auto rounded = static_cast<std::size_t>(std::floor(channels / u + 0.5)) * unit;
  return std::max(unit, rounded);
}

std::size_t scale_depth(std::size_t layers, double depth_multiplier) {
  const auto scaled = static_cast<std::size_t>(
      std::floor(depth_multiplier * static_cast<double>(layers) + 0.5));
  return std::max(layers, scaled);
}

ScaledArch scale_arch(const ScaledArch& baseline, const ScalingCoefficients& c) {
  c.validate();
  baseline.validate();
  if (c.phi == 0.0) return baseline;
  const double d = std::pow(c.alpha, c.phi);
  const double w = std::pow(c.beta, c.phi);
  const double r = std::pow(c.gamma, c.phi);
  ScaledArch out = baseline;
  for (StageSpec& s : out.stages) {
    if (!s.fixed_depth) s.layers = scale_depth(s.layers, d);
    s.channels = round_channels(w * static_cast<double>(s.channels));
  }
  out.resolution = static_cast<std::size_t>(
      std::llround(r * static_cast<double>(baseline.resolution)));
  if (out.resolution < out.stride_product()) {
    fail(ErrorCode::kInvalidArgument, "scaled resolution ", out.resolution,
         " is below the minimum ", out.stride_product());
  }
  return out;
}

double estimate_flops(const ScaledArch& arch) {
  double flops = 0.0;
  std::size_t h = arch.resolution, w = arch.resolution;
  std::size_t cin = arch.input_channels;
  for (const StageSpec& s : arch.stages) {
    for (std::size_t layer = 0; layer < s.layers; ++layer) {
      const std::size_t stride = layer == 0 ? s.stride : 1;
      const std::size_t oh = (h + stride - 1) / stride;
      const std::size_t ow = (w + stride - 1) / stride;
      const double out_px = static_cast<double>(oh * ow);
      const double kk = static_cast<double>(s.kernel * s.kernel);
      if (s.kind == BlockKind::kConv) {
        flops += 2.0 * out_px * kk * static_cast<double>(cin * s.channels);
      } else {
        const std::size_t e = cin * s.expansion;
        if (s.expansion != 1) flops += 2.0 * static_cast<double>(h * w * cin * e);
        flops += 2.0 * out_px * kk * static_cast<double>(e);
        const auto m = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::floor(static_cast<double>(cin) * arch.se_ratio)));
        flops += 2.0 * static_cast<double>(2 * e * std::min(m, e));
        flops += 2.0 * out_px * static_cast<double>(e * s.channels);
      }
      h = oh;
      w = ow;
      cin = s.channels;
    }
  }
  flops += 2.0 * static_cast<double>(cin * arch.head.hidden_units +
                                     arch.head.hidden_units * arch.head.outputs());
  return flops;
}

std::string format_arch(const ScaledArch& arch) {
  std::ostringstream os;
  os << "version = " << kSchemaVersion << '\n'
     << "name = " << arch.name << '\n'
     << "resolution = " << arch.resolution << '\n'
     << "input_channels = " << arch.input_channels << '\n'
     << "se_ratio = " << format_double(arch.se_ratio) << '\n'
     << "se_variant = "
     << (arch.se_variant == nn::SEVariant::kFcSigmoid ? "fc" : "pointwise") << '\n'
     << "se_gate = "
     << (arch.se_gate == nn::GateActivation::kSigmoid ? "sigmoid" : "relu") << '\n'
     << "head_mode = "
     << (arch.head.mode == nn::HeadMode::kClassify ? "classify" : "regress") << '\n'
     << "head_hidden = " << arch.head.hidden_units << '\n'
     << "head_dropout = " << format_double(arch.head.dropout_rate) << '\n';
  for (const StageSpec& s : arch.stages) {
    os << "stage = " << block_kind_name(s.kind) << " kernel=" << s.kernel
       << " stride=" << s.stride << " channels=" << s.channels
       << " layers=" << s.layers << " expansion=" << s.expansion;
    if (s.fixed_depth) os << " depth=fixed";
    os << '\n';
  }
  return os.str();
}

ScaledArch parse_arch(std::string_view text) {
  ScaledArch arch;
  arch.stages.clear();
  bool seen_version = false;
  std::size_t line_no = 0;
  for (std::string_view line : text::split_lines(text)) {
    ++line_no;
    line = text::trim(text::strip_comment(line));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      fail(ErrorCode::kSchema, "arch line ", line_no, ": expected key = value");
    }
    const std::string_view key = text::trim(line.substr(0, eq));
    const std::string_view value = text::trim(line.substr(eq + 1));
    if (key == "version") {
      if (parse_size(key, value) != static_cast<std::size_t>(kSchemaVersion)) {
        fail(ErrorCode::kSchema, "arch: unsupported schema version ", value);
      }
      seen_version = true;
    } else if (key == "name") {
      arch.name = std::string(value);
    } else if (key == "resolution") {
      arch.resolution = parse_size(key, value);
    } else if (key == "input_channels") {
      arch.input_channels = parse_size(key, value);
    } else if (key == "se_ratio") {
      arch.se_ratio = parse_real(key, value);
    } else if (key == "se_variant") {
      if (value == "fc") {
        arch.se_variant = nn::SEVariant::kFcSigmoid;
      } else if (value == "pointwise") {
        arch.se_variant = nn::SEVariant::kPointwise;
      } else {
        fail(ErrorCode::kSchema, "arch: se_variant must be fc or pointwise");
      }
    } else if (key == "se_gate") {
      if (value == "sigmoid") {
        arch.se_gate = nn::GateActivation::kSigmoid;
      } else if (value == "relu") {
        arch.se_gate = nn::GateActivation::kRelu;
      } else {
        fail(ErrorCode::kSchema, "arch: se_gate must be sigmoid or relu");
      }
    } else if (key == "head_mode") {
      if (value == "classify") {
        arch.head.mode = nn::HeadMode::kClassify;
      } else if (value == "regress") {
        arch.head.mode = nn::HeadMode::kRegress;
      } else {
        fail(ErrorCode::kSchema, "arch: head_mode must be classify or regress");
      }
    } else if (key == "head_hidden") {
      arch.head.hidden_units = parse_size(key, value);
    } else if (key == "head_dropout") {
      arch.head.dropout_rate = parse_real(key, value);
    } else if (key == "stage") {
      arch.stages.push_back(parse_stage(value));
    } else {
      fail(ErrorCode::kSchema, "arch line ", line_no, ": unknown key '", key, "'");
    }
  }
  if (!seen_version) fail(ErrorCode::kSchema, "arch: missing version");
  arch.validate();
  return arch;
}

ScaledArch baseline_arch() { return parse_arch(resources::baseline_arch()); }

ScaledArch toy_arch() { return parse_arch(resources::toy_arch()); }

std::vector<std::string> preset_names() {
  return {"b0", "b1", "b2", "b3", "b4", "b5", "b6", "b7", "toy"};
}

ScaledArch preset(std::string_view name) {
  if (name == "toy") return toy_arch();
  if (name.size() == 2 && name[0] == 'b' && name[1] >= '0' && name[1] <= '7') {
    const int phi = name[1] - '0';
    ScalingCoefficients c;
    c.phi = phi;
    ScaledArch arch = scale_arch(baseline_arch(), c);
    arch.name = std::string(name);
    arch.resolution = phi <= 3 ? 224 : 256;
    return arch;
  }
  fail(ErrorCode::kInvalidArgument, "unknown preset '", name,
       "' (expected b0..b7 or toy)");
}

std::size_t preset_batch_size(std::string_view name) {
  if (name == "toy") return 16;
  if (name == "b0" || name == "b1") return 256;
  if (name == "b2" || name == "b3") return 128;
  return 64;
}

std::string_view block_kind_name(BlockKind kind) {
  return kind == BlockKind::kConv ? "conv" : "mbconv";
}

}  // namespace morphnet::scaling
