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

// Command implementations behind the C API: each takes a RunConfig plus
// explicit paths and returns printable summaries.

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "app/config.hpp"
#include "gz2/curation.hpp"
#include "gz2/manifest.hpp"
#include "metrics/metrics.hpp"
#include "scaling/arch.hpp"
#include "scaling/network.hpp"
#include "train/checkpoint.hpp"
#include "train/fit.hpp"

namespace morphnet::app {

/// Preset (or scaled baseline) with the config's head mode and SE overrides.
scaling::ScaledArch resolve_arch(const RunConfig& cfg);
train::PreprocessConfig preprocessing_for(const RunConfig& cfg, const scaling::ScaledArch& arch);
train::TrainConfig train_config(const RunConfig& cfg, const scaling::ScaledArch& arch);

struct CurateSummary {
  gz2::CurationResult curation;
  gz2::DatasetManifest manifest;
  std::size_t catalog_rows = 0;
  std::size_t rejected_rows = 0;
  std::string text;
};

/// Curates `catalog_path`, splits it and writes the manifest. Targets are
/// attached when the config is in regression mode.
CurateSummary curate(const RunConfig& cfg, const std::string& catalog_path,
                     const std::string& out_manifest);

struct EvalSummary {
  nn::HeadMode mode = nn::HeadMode::kClassify;
  std::size_t samples = 0;
  std::optional<metrics::ConfusionMatrix> confusion;
  std::optional<metrics::ClassificationReport> classification;
  std::optional<metrics::RegressionReport> regression;
  std::string text;
  std::string json;
};

struct TrainSummary {
  train::FitResult fit;
  std::string checkpoint_path;
  std::string history_path;
  std::optional<EvalSummary> test;
  std::string text;
};

/// Writes `<out_dir>/best.ckpt`, `history.csv` and `run.cfg`.
TrainSummary run_train(const RunConfig& cfg, const std::string& manifest_path,
                       const std::string& image_dir, const std::string& out_dir,
                       const std::function<void(const train::EpochRecord&)>& on_epoch = {});

struct LoadedModel {
  train::Checkpoint checkpoint;
  scaling::ScaledArch arch;
  std::unique_ptr<scaling::Network<float>> net;
};

/// Rebuilds the network described by the checkpoint and loads its weights.
LoadedModel load_model(const std::string& path);

/// `split` is "train", "test" or "all".
EvalSummary evaluate(LoadedModel& model, const RunConfig& cfg, const std::string& manifest_path,
                     const std::string& image_dir, const std::string& split);

/// Scores every .png/.jpg/.jpeg in `image_dir` (ids are file stems, sorted)
/// with a regression model and writes a submission. Returns the row count.
std::size_t predict_dir(LoadedModel& model, const RunConfig& cfg, const std::string& image_dir,
                        const std::string& out_csv);

struct ScaleInfo {
  scaling::ScaledArch arch;
  double flops = 0;
  double baseline_flops = 0;
  double constraint_deviation = 0;
  std::string text;
};

ScaleInfo scale_info(const scaling::ScalingCoefficients& c);

/// Writes `<out_dir>/featmap_<layer>.png` per layer; returns the paths.
std::vector<std::string> export_feature_maps(LoadedModel& model, const RunConfig& cfg,
                                             const std::string& image_path,
                                             const std::vector<std::string>& layers,
                                             const std::string& out_dir);

struct EnsembleSummary {
  std::size_t rows = 0;
  std::vector<double> member_rmse;  // filled when targets are given
  std::optional<double> ensemble_rmse;
  std::string text;
};

/// Averages submissions with identical id columns. `targets_catalog` may be
/// empty; otherwise every id must appear in it.
EnsembleSummary ensemble(const std::vector<std::string>& inputs, const std::string& out_csv,
                         const std::string& targets_catalog);

}  // namespace morphnet::app
