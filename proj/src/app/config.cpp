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


#include "app/config.hpp"

#include <algorithm>
#include <functional>
#include <map>

#include "common/error.hpp"
#include "common/io.hpp"
#include "common/text.hpp"

namespace morphnet::app {
namespace {

struct Field {
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

[[noreturn]] void bad_value(std::string_view key, std::string_view value, std::string_view want) {
  fail(ErrorCode::kConfiguration, "config key '", key, "': expected ", want, ", got '", value, "'");
}

template <typename M>
Field text_field(M RunConfig::*m) {
  return {[m](RunConfig& c, std::string_view v) { c.*m = std::string(v); },
          [m](const RunConfig& c) { return c.*m; }};
}

template <typename M>
Field count_field(std::string_view key, M RunConfig::*m) {
  return {[m, key](RunConfig& c, std::string_view v) {
            M out{};
            if (!text::parse_number(v, out)) bad_value(key, v, "a non-negative integer");
            c.*m = out;
          },
          [m](const RunConfig& c) { return std::to_string(c.*m); }};
}

template <typename Get>
Field real_field(std::string_view key, Get ref) {
  return {[ref, key](RunConfig& c, std::string_view v) {
            double out = 0;
            if (!text::parse_number(v, out)) bad_value(key, v, "a number");
            ref(c) = out;
          },
          [ref](const RunConfig& c) { return text::format_real(ref(const_cast<RunConfig&>(c))); }};
}

bool parse_bool(std::string_view key, std::string_view v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  bad_value(key, v, "true or false");
}

template <typename Get>
Field bool_field(std::string_view key, Get ref) {
  return {[ref, key](RunConfig& c, std::string_view v) { ref(c) = parse_bool(key, v); },
          [ref](const RunConfig& c) {
            return std::string(ref(const_cast<RunConfig&>(c)) ? "true" : "false");
          }};
}

const std::map<std::string, Field, std::less<>>& fields() {
  static const std::map<std::string, Field, std::less<>> table = [] {
    std::map<std::string, Field, std::less<>> t;
    t["run.seed"] = count_field("run.seed", &RunConfig::seed);

    t["paths.catalog"] = text_field(&RunConfig::catalog);
    t["paths.image_dir"] = text_field(&RunConfig::image_dir);
    t["paths.manifest"] = text_field(&RunConfig::manifest);
    t["paths.checkpoint_dir"] = text_field(&RunConfig::checkpoint_dir);
    t["paths.rules"] = text_field(&RunConfig::rules);

    t["model.variant"] = {[](RunConfig& c, std::string_view v) {
                            const auto names = scaling::preset_names();
                            if (v != "scaled" && std::find(names.begin(), names.end(), v) == names.end()) {
                              bad_value("model.variant", v, "b0..b7, toy or scaled");
                            }
                            c.variant = std::string(v);
                          },
                          [](const RunConfig& c) { return c.variant; }};
    t["model.mode"] = {[](RunConfig& c, std::string_view v) {
                         if (v == "classify") c.mode = nn::HeadMode::kClassify;
                         else if (v == "regress") c.mode = nn::HeadMode::kRegress;
                         else bad_value("model.mode", v, "classify or regress");
                       },
                       [](const RunConfig& c) {
                         return std::string(c.mode == nn::HeadMode::kClassify ? "classify" : "regress");
                       }};
    t["model.se_gate"] = {[](RunConfig& c, std::string_view v) {
                            if (!v.empty() && v != "sigmoid" && v != "relu") {
                              bad_value("model.se_gate", v, "sigmoid or relu");
                            }
                            c.se_gate = std::string(v);
                          },
                          [](const RunConfig& c) { return c.se_gate; }};
    t["model.se_variant"] = {[](RunConfig& c, std::string_view v) {
                               if (!v.empty() && v != "fc" && v != "pointwise") {
                                 bad_value("model.se_variant", v, "fc or pointwise");
                               }
                               c.se_variant = std::string(v);
                             },
                             [](const RunConfig& c) { return c.se_variant; }};

    t["scaling.alpha"] = real_field("scaling.alpha", [](RunConfig& c) -> double& { return c.scaling.alpha; });
    t["scaling.beta"] = real_field("scaling.beta", [](RunConfig& c) -> double& { return c.scaling.beta; });
    t["scaling.gamma"] = real_field("scaling.gamma", [](RunConfig& c) -> double& { return c.scaling.gamma; });
    t["scaling.phi"] = real_field("scaling.phi", [](RunConfig& c) -> double& { return c.scaling.phi; });

    t["train.epochs"] = count_field("train.epochs", &RunConfig::epochs);
    t["train.batch_size"] = count_field("train.batch_size", &RunConfig::batch_size);
    t["train.lr"] = real_field("train.lr", [](RunConfig& c) -> double& { return c.lr; });
    t["train.validation_fraction"] =
        real_field("train.validation_fraction", [](RunConfig& c) -> double& { return c.validation_fraction; });
    t["train.plateau_patience"] = count_field("train.plateau_patience", &RunConfig::plateau_patience);
    t["train.plateau_factor"] =
        real_field("train.plateau_factor", [](RunConfig& c) -> double& { return c.plateau_factor; });
    t["train.min_lr"] = real_field("train.min_lr", [](RunConfig& c) -> double& { return c.min_lr; });
    t["train.early_stop_patience"] = count_field("train.early_stop_patience", &RunConfig::early_stop_patience);
    t["train.early_stopping"] =
        bool_field("train.early_stopping", [](RunConfig& c) -> bool& { return c.early_stopping; });
    t["train.cache_images"] = bool_field("train.cache_images", [](RunConfig& c) -> bool& { return c.cache_images; });
    t["train.threads"] = count_field("train.threads", &RunConfig::threads);

    t["augment.enabled"] = bool_field("augment.enabled", [](RunConfig& c) -> bool& { return c.augment; });
    t["augment.rotation_min"] = real_field(
        "augment.rotation_min", [](RunConfig& c) -> double& { return c.augmentation.rotation_min_deg; });
    t["augment.rotation_max"] = real_field(
        "augment.rotation_max", [](RunConfig& c) -> double& { return c.augmentation.rotation_max_deg; });
    t["augment.shift"] =
        real_field("augment.shift", [](RunConfig& c) -> double& { return c.augmentation.shift_fraction; });
    t["augment.hflip"] =
        bool_field("augment.hflip", [](RunConfig& c) -> bool& { return c.augmentation.horizontal_flip; });
    t["augment.vflip"] =
        bool_field("augment.vflip", [](RunConfig& c) -> bool& { return c.augmentation.vertical_flip; });
    t["augment.brightness_min"] = real_field(
        "augment.brightness_min", [](RunConfig& c) -> double& { return c.augmentation.brightness_min; });
    t["augment.brightness_max"] = real_field(
        "augment.brightness_max", [](RunConfig& c) -> double& { return c.augmentation.brightness_max; });

    t["preprocess.crop"] = {[](RunConfig& c, std::string_view v) {
                              if (v == "central") c.crop = train::CropMode::kCentral;
                              else if (v == "none") c.crop = train::CropMode::kNone;
                              else bad_value("preprocess.crop", v, "central or none");
                            },
                            [](const RunConfig& c) {
                              return std::string(c.crop == train::CropMode::kCentral ? "central" : "none");
                            }};
    t["preprocess.target"] = count_field("preprocess.target", &RunConfig::target);

    t["curate.or_mode_class6"] =
        bool_field("curate.or_mode_class6", [](RunConfig& c) -> bool& { return c.or_mode_class6; });
    t["curate.image_ext"] = text_field(&RunConfig::image_ext);
    t["curate.split_train"] = count_field("curate.split_train", &RunConfig::split_train);
    t["curate.split_test"] = count_field("curate.split_test", &RunConfig::split_test);

    t["featmap.channels"] = count_field("featmap.channels", &RunConfig::featmap_channels);
    t["featmap.columns"] = count_field("featmap.columns", &RunConfig::featmap_columns);
    return t;
  }();
  return table;
}

const Field& field(std::string_view key) {
  const auto& t = fields();
  const auto it = t.find(key);
  if (it == t.end()) fail(ErrorCode::kConfiguration, "unknown config key '", key, "'");
  return it->second;
}

}  // namespace

void RunConfig::set(std::string_view key, std::string_view value) {
  field(text::trim(key)).set(*this, text::trim(value));
}

std::string RunConfig::get(std::string_view key) const { return field(text::trim(key)).get(*this); }

void RunConfig::load_text(std::string_view text) {
  std::size_t line_no = 0;
  for (std::string_view line : text::split_lines(text)) {
    ++line_no;
    line = text::trim(text::strip_comment(line));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      fail(ErrorCode::kConfiguration, "config line ", line_no, ": expected key = value");
    }
    try {
      set(line.substr(0, eq), line.substr(eq + 1));
    } catch (const Error& e) {
      fail(e.code(), "config line ", line_no, ": ", e.what());
    }
  }
}

void RunConfig::load_file(const std::string& path) { load_text(io::read_file(path)); }

std::string RunConfig::format() const {
  std::string out;
  for (const auto& [key, f] : fields()) out += key + " = " + f.get(*this) + "\n";
  return out;
}

std::vector<std::string> RunConfig::keys() {
  std::vector<std::string> k;
  for (const auto& entry : fields()) k.push_back(entry.first);
  return k;
}

}  // namespace morphnet::app
