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


#include "morphnet/morphnet.h"

#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <new>
#include <string>
#include <vector>

#include "app/commands.hpp"
#include "app/config.hpp"
#include "check/gradsuite.hpp"
#include "common/error.hpp"
#include "common/text.hpp"
#include "gz2/image.hpp"
#include "gz2/synthetic.hpp"
#include "train/data.hpp"

struct mn_config {
  morphnet::app::RunConfig cfg;
};

struct mn_model {
  morphnet::app::LoadedModel model;
};

namespace {

using morphnet::Error;
using morphnet::ErrorCode;

thread_local std::string g_last_error;

mn_status to_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return MN_INVALID_ARGUMENT;
    case ErrorCode::kShape: return MN_SHAPE_ERROR;
    case ErrorCode::kSchema: return MN_SCHEMA_ERROR;
    case ErrorCode::kIo: return MN_IO_ERROR;
    case ErrorCode::kIntegrity: return MN_INTEGRITY_ERROR;
    case ErrorCode::kNumeric: return MN_NUMERIC_ERROR;
    case ErrorCode::kNotFound: return MN_NOT_FOUND;
    case ErrorCode::kConfiguration: return MN_CONFIGURATION_ERROR;
  }
  return MN_INTERNAL_ERROR;
}

template <typename F>
mn_status guard(F&& f) {
  try {
    f();
    g_last_error.clear();
    return MN_OK;
  } catch (const Error& e) {
    g_last_error = e.what();
    return to_status(e.code());
  } catch (const std::filesystem::filesystem_error& e) {
    g_last_error = e.what();
    return MN_IO_ERROR;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return MN_INTERNAL_ERROR;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return MN_INTERNAL_ERROR;
  } catch (...) {
    g_last_error = "unknown failure";
    return MN_INTERNAL_ERROR;
  }
}

void require(const void* p, const char* what) {
  if (p == nullptr) morphnet::fail(ErrorCode::kInvalidArgument, what, " must not be NULL");
}

std::string str(const char* s, const char* what) {
  require(s, what);
  return s;
}

void give(char** out, const std::string& s) {
  if (out == nullptr) return;
  char* p = static_cast<char*>(std::malloc(s.size() + 1));
  if (p == nullptr) throw std::bad_alloc();
  std::memcpy(p, s.c_str(), s.size() + 1);
  *out = p;
}

std::string join_lines(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) out += s + "\n";
  return out;
}

const morphnet::app::RunConfig& config_or_default(const mn_config* cfg) {
  static const morphnet::app::RunConfig defaults;
  return cfg != nullptr ? cfg->cfg : defaults;
}

}  // namespace

extern "C" {

const char* mn_version(void) { return "1.0.0"; }

const char* mn_status_name(mn_status status) {
  switch (status) {
    case MN_OK: return "ok";
    case MN_INVALID_ARGUMENT: return "invalid-argument";
    case MN_SHAPE_ERROR: return "shape-error";
    case MN_SCHEMA_ERROR: return "schema-error";
    case MN_IO_ERROR: return "io-error";
    case MN_INTEGRITY_ERROR: return "integrity-error";
    case MN_NUMERIC_ERROR: return "numeric-error";
    case MN_NOT_FOUND: return "not-found";
    case MN_CONFIGURATION_ERROR: return "configuration-error";
    case MN_INTERNAL_ERROR: return "internal-error";
  }
  return "unknown-status";
}

const char* mn_last_error(void) { return g_last_error.c_str(); }

void mn_string_free(char* s) { std::free(s); }

mn_status mn_config_create(mn_config** out) {
  return guard([&] {
    require(out, "out");
    *out = new mn_config();
  });
}

void mn_config_destroy(mn_config* cfg) { delete cfg; }

mn_status mn_config_load(mn_config* cfg, const char* path) {
  return guard([&] {
    require(cfg, "cfg");
    cfg->cfg.load_file(str(path, "path"));
  });
}

mn_status mn_config_set(mn_config* cfg, const char* key, const char* value) {
  return guard([&] {
    require(cfg, "cfg");
    cfg->cfg.set(str(key, "key"), str(value, "value"));
  });
}

mn_status mn_config_get(const mn_config* cfg, const char* key, char** value) {
  return guard([&] {
    require(cfg, "cfg");
    require(value, "value");
    give(value, cfg->cfg.get(str(key, "key")));
  });
}

mn_status mn_config_dump(const mn_config* cfg, char** text) {
  return guard([&] {
    require(cfg, "cfg");
    require(text, "text");
    give(text, cfg->cfg.format());
  });
}

mn_status mn_config_keys(char** keys) {
  return guard([&] {
    require(keys, "keys");
    give(keys, join_lines(morphnet::app::RunConfig::keys()));
  });
}

mn_status mn_curate(const mn_config* cfg, const char* catalog_path, const char* out_manifest,
                    mn_class_counts* counts, char** report) {
  return guard([&] {
    const auto s = morphnet::app::curate(config_or_default(cfg), str(catalog_path, "catalog_path"),
                                         str(out_manifest, "out_manifest"));
    if (counts != nullptr) {
      const auto c = s.manifest.counts();
      for (std::size_t k = 0; k < MN_NUM_CLASSES; ++k) {
        counts->train[k] = c[k][0];
        counts->test[k] = c[k][1];
      }
    }
    give(report, s.text);
  });
}

mn_status mn_train(const mn_config* cfg, const char* manifest_path, const char* image_dir,
                   const char* out_dir, mn_epoch_callback on_epoch, void* user, char** report) {
  return guard([&] {
    auto cb = [&](const morphnet::train::EpochRecord& r) {
      if (on_epoch == nullptr) return;
      const mn_epoch e{r.epoch, r.lr, r.train_loss, r.val_loss, r.train_metric, r.val_metric,
                       r.improved ? 1 : 0};
      on_epoch(&e, user);
    };
    const auto s = morphnet::app::run_train(config_or_default(cfg), str(manifest_path, "manifest_path"),
                                            image_dir != nullptr ? image_dir : "",
                                            str(out_dir, "out_dir"), cb);
    give(report, s.text);
  });
}

mn_status mn_model_load(const char* checkpoint_path, mn_model** out) {
  return guard([&] {
    require(out, "out");
    auto m = std::make_unique<mn_model>();
    m->model = morphnet::app::load_model(str(checkpoint_path, "checkpoint_path"));
    *out = m.release();
  });
}

void mn_model_destroy(mn_model* model) { delete model; }

mn_status mn_model_arch(const mn_model* model, char** text) {
  return guard([&] {
    require(model, "model");
    require(text, "text");
    give(text, morphnet::scaling::format_arch(model->model.arch));
  });
}

mn_status mn_model_layers(const mn_model* model, char** names) {
  return guard([&] {
    require(model, "model");
    require(names, "names");
    give(names, join_lines(model->model.net->layer_names()));
  });
}

size_t mn_model_outputs(const mn_model* model) {
  return model == nullptr ? 0 : model->model.arch.head.outputs();
}

mn_status mn_eval(mn_model* model, const mn_config* cfg, const char* manifest_path,
                  const char* image_dir, const char* split, double* metric, char** text,
                  char** json) {
  return guard([&] {
    require(model, "model");
    const auto s = morphnet::app::evaluate(model->model, config_or_default(cfg),
                                           str(manifest_path, "manifest_path"),
                                           image_dir != nullptr ? image_dir : "",
                                           split != nullptr ? split : "test");
    if (metric != nullptr) *metric = s.classification ? s.classification->accuracy : s.regression->rmse;
    give(text, s.text);
    give(json, s.json);
  });
}

mn_status mn_predict_image(mn_model* model, const mn_config* cfg, const char* image_path, float* out,
                           size_t capacity) {
  return guard([&] {
    require(model, "model");
    require(out, "out");
    auto& m = model->model;
    if (capacity < m.arch.head.outputs()) {
      morphnet::fail(ErrorCode::kInvalidArgument, "output buffer holds ", capacity, " values, need ",
                     m.arch.head.outputs());
    }
    const auto img = morphnet::train::preprocess(morphnet::gz2::load_image(str(image_path, "image_path")),
                                                 morphnet::app::preprocessing_for(config_or_default(cfg), m.arch));
    morphnet::ad::Tensor<float> x({1, img.height, img.width, img.channels}, img.pixels);
    morphnet::ad::Tape<float> tape;
    morphnet::Rng rng(0);
    const auto y = m.net->forward(tape, tape.constant(std::move(x)), false, rng);
    const auto& v = tape.value(y);
    std::copy(v.data().begin(), v.data().end(), out);
  });
}

mn_status mn_predict(mn_model* model, const mn_config* cfg, const char* image_dir, const char* out_csv,
                     size_t* rows) {
  return guard([&] {
    require(model, "model");
    const std::size_t n = morphnet::app::predict_dir(model->model, config_or_default(cfg),
                                                     str(image_dir, "image_dir"), str(out_csv, "out_csv"));
    if (rows != nullptr) *rows = n;
  });
}

mn_status mn_featmap(mn_model* model, const mn_config* cfg, const char* image_path,
                     const char* const* layers, size_t layer_count, const char* out_dir, char** written) {
  return guard([&] {
    require(model, "model");
    if (layer_count > 0) require(layers, "layers");
    std::vector<std::string> names;
    for (size_t i = 0; i < layer_count; ++i) names.push_back(str(layers[i], "layer name"));
    const auto paths = morphnet::app::export_feature_maps(model->model, config_or_default(cfg),
                                                          str(image_path, "image_path"), names,
                                                          str(out_dir, "out_dir"));
    give(written, join_lines(paths));
  });
}

mn_status mn_scale_info(double alpha, double beta, double gamma, double phi, mn_scale_result* result,
                        char** text) {
  return guard([&] {
    const auto s = morphnet::app::scale_info({alpha, beta, gamma, phi});
    if (result != nullptr) {
      *result = {s.arch.resolution, s.flops, s.baseline_flops, s.constraint_deviation};
    }
    give(text, s.text);
  });
}

void mn_gradcheck_defaults(mn_gradcheck_options* options) {
  if (options == nullptr) return;
  const morphnet::check::GradSuiteOptions d;
  *options = {d.seeds, d.root_seed, d.eps, d.tolerance, d.max_retries, d.max_elements_per_tensor};
}

mn_status mn_gradcheck(const mn_gradcheck_options* options, const char* only, mn_gradcase_callback on_case,
                       void* user, int* passed, double* max_rel_error, char** report) {
  return guard([&] {
    morphnet::check::GradSuiteOptions o;
    if (options != nullptr) {
      o.seeds = options->seeds;
      o.root_seed = options->seed;
      o.eps = options->eps;
      o.tolerance = options->tolerance;
      o.max_retries = options->max_retries;
      o.max_elements_per_tensor = options->max_elements_per_tensor;
    }
    if (only != nullptr) {
      for (auto part : morphnet::text::split(only, ',')) {
        part = morphnet::text::trim(part);
        if (!part.empty()) o.only.emplace_back(part);
      }
    }
    std::string text;
    const auto r = morphnet::check::run_grad_suite(o, [&](const morphnet::check::GradCaseResult& c) {
      char line[256];
      std::snprintf(line, sizeof line, "%-22s %-4s max rel %.3e  checked %zu  resampled %zu\n",
                    c.name.c_str(), c.passed ? "ok" : "FAIL", c.max_rel_error, c.checked, c.resamples);
      text += line;
      if (!c.passed && !c.worst.empty()) text += "  worst " + c.worst + "\n";
      if (on_case != nullptr) on_case(c.name.c_str(), c.max_rel_error, c.checked, c.passed ? 1 : 0, user);
    });
    char tail[160];
    std::snprintf(tail, sizeof tail, "%zu cases, max rel error %.3e, %.1f s: %s\n", r.cases.size(),
                  r.max_rel_error, r.seconds, r.passed ? "passed" : "FAILED");
    text += tail;
    if (passed != nullptr) *passed = r.passed ? 1 : 0;
    if (max_rel_error != nullptr) *max_rel_error = r.max_rel_error;
    give(report, text);
  });
}

mn_status mn_gradcheck_cases(char** names) {
  return guard([&] {
    require(names, "names");
    give(names, join_lines(morphnet::check::grad_case_names()));
  });
}

mn_status mn_make_synthetic(const char* out_dir, size_t count, size_t size, uint64_t seed) {
  return guard([&] {
    morphnet::gz2::make_synthetic_dataset(str(out_dir, "out_dir"), {count, size, seed});
  });
}

mn_status mn_ensemble(const char* const* inputs, size_t count, const char* out_csv,
                      const char* targets_catalog, double* ensemble_rmse, char** report) {
  return guard([&] {
    if (count > 0) require(inputs, "inputs");
    std::vector<std::string> files;
    for (size_t i = 0; i < count; ++i) files.push_back(str(inputs[i], "input path"));
    const auto s = morphnet::app::ensemble(files, str(out_csv, "out_csv"),
                                           targets_catalog != nullptr ? targets_catalog : "");
    if (ensemble_rmse != nullptr) *ensemble_rmse = s.ensemble_rmse.value_or(std::nan(""));
    give(report, s.text);
  });
}

}  // extern "C"
