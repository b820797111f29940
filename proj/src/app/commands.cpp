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


#include "app/commands.hpp"

#include <algorithm>
#include <cctype>
#include <cstdio>
#include <filesystem>
#include <map>
#include <numeric>
#include <sstream>

#include "common/error.hpp"
#include "common/io.hpp"
#include "common/text.hpp"
#include "gz2/catalog.hpp"
#include "gz2/image.hpp"
#include "metrics/featmap.hpp"
#include "train/data.hpp"

namespace morphnet::app {
namespace fs = std::filesystem;

namespace {

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string join(const std::string& dir, const std::string& name) {
  return dir.empty() ? name : (fs::path(dir) / name).string();
}

int argmax(const std::vector<float>& row) {
  return static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin());
}

EvalSummary evaluate_entries(scaling::Network<float>& net, std::vector<gz2::ManifestEntry> entries,
                             const std::string& image_dir, const train::PreprocessConfig& pre,
                             std::size_t batch, std::size_t threads) {
  if (entries.empty()) fail(ErrorCode::kInvalidArgument, "no manifest entries to evaluate");
  const nn::HeadMode mode = net.arch().head.mode;
  train::ImageDataset data(std::move(entries), image_dir, pre, threads);
  train::require_images(data);
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const auto pred = train::predict(net, data, idx, batch);

  EvalSummary s;
  s.mode = mode;
  s.samples = data.size();
  if (mode == nn::HeadMode::kClassify) {
    std::vector<int> p, t;
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (data.entry(i).label < 0) {
        fail(ErrorCode::kSchema, "entry ", data.entry(i).galaxy_id, " has no class label");
      }
      p.push_back(argmax(pred[i]));
      t.push_back(data.entry(i).label);
    }
    s.confusion = metrics::confusion(p, t, gz2::kNumClasses);
    s.classification = metrics::report(*s.confusion);
    s.text = metrics::format_report_text(*s.classification, *s.confusion);
    s.json = metrics::format_report_json(*s.classification, *s.confusion);
  } else {
    std::vector<double> p, t;
    for (std::size_t i = 0; i < data.size(); ++i) {
      const auto& tg = data.entry(i).targets;
      if (!tg) fail(ErrorCode::kSchema, "entry ", data.entry(i).galaxy_id, " has no vote-fraction targets");
      p.insert(p.end(), pred[i].begin(), pred[i].end());
      t.insert(t.end(), tg->begin(), tg->end());
    }
    s.regression = metrics::rmse(p, t, gz2::kNumAnswers);
    s.text = metrics::format_regression_text(*s.regression);
    s.json = metrics::format_regression_json(*s.regression);
  }
  return s;
}

}  // namespace

scaling::ScaledArch resolve_arch(const RunConfig& cfg) {
  scaling::ScaledArch arch = cfg.variant == "scaled"
                                 ? scaling::scale_arch(scaling::baseline_arch(), cfg.scaling)
                                 : scaling::preset(cfg.variant);
  arch.head.mode = cfg.mode;
  if (cfg.se_gate == "sigmoid") arch.se_gate = nn::GateActivation::kSigmoid;
  if (cfg.se_gate == "relu") arch.se_gate = nn::GateActivation::kRelu;
  if (cfg.se_variant == "fc") arch.se_variant = nn::SEVariant::kFcSigmoid;
  if (cfg.se_variant == "pointwise") arch.se_variant = nn::SEVariant::kPointwise;
  arch.validate();
  return arch;
}

train::PreprocessConfig preprocessing_for(const RunConfig& cfg, const scaling::ScaledArch& arch) {
  train::PreprocessConfig pre;
  pre.crop = cfg.crop;
  pre.target = cfg.target == 0 ? arch.resolution : cfg.target;
  // A target taken from the architecture is deliberate.
  pre.allow_other_target = cfg.target == 0;
  return pre;
}

train::TrainConfig train_config(const RunConfig& cfg, const scaling::ScaledArch& arch) {
  train::TrainConfig t;
  t.epochs = cfg.epochs;
  t.batch_size = cfg.batch_size != 0 ? cfg.batch_size
                 : cfg.variant == "scaled" ? std::size_t{64}
                                           : scaling::preset_batch_size(cfg.variant);
  t.lr = cfg.lr;
  t.seed = cfg.seed;
  t.validation_fraction = cfg.validation_fraction;
  if (cfg.augment) {
    cfg.augmentation.validate();
    t.augmentation = cfg.augmentation;
  } else {
    t.augmentation.reset();
  }
  t.preprocessing = preprocessing_for(cfg, arch);
  t.plateau_patience = cfg.plateau_patience;
  t.plateau_factor = cfg.plateau_factor;
  t.min_lr = cfg.min_lr;
  t.early_stop_patience = cfg.early_stop_patience;
  t.early_stopping = cfg.early_stopping;
  t.cache_images = cfg.cache_images;
  t.threads = cfg.threads;
  t.validate();
  return t;
}

CurateSummary curate(const RunConfig& cfg, const std::string& catalog_path,
                     const std::string& out_manifest) {
  gz2::Catalog catalog = gz2::load_catalog(catalog_path);
  if (catalog.rows.empty()) fail(ErrorCode::kSchema, "catalog ", catalog_path, " has no rows");
  auto rules = cfg.rules.empty() ? gz2::default_rules() : gz2::parse_rules(io::read_file(cfg.rules));
  if (cfg.or_mode_class6) rules = gz2::with_or_mode(std::move(rules));

  CurateSummary s;
  s.catalog_rows = catalog.rows.size();
  s.rejected_rows = catalog.rejected.size();
  s.curation = gz2::select_clean(catalog.rows, rules);
  s.manifest = gz2::split_dataset(s.curation.samples, {cfg.split_train, cfg.split_test}, cfg.seed,
                                  cfg.image_dir, cfg.image_ext);
  if (cfg.mode == nn::HeadMode::kRegress) {
    std::map<std::string, const gz2::CatalogRow*> by_id;
    for (const auto& r : catalog.rows) by_id[r.galaxy_id] = &r;
    for (auto& e : s.manifest.entries) {
      std::array<float, gz2::kNumAnswers> t{};
      const auto& f = by_id.at(e.galaxy_id)->fractions;
      std::transform(f.begin(), f.end(), t.begin(), [](double v) { return static_cast<float>(v); });
      e.targets = t;
    }
  }
  gz2::save_manifest(out_manifest, s.manifest);

  std::ostringstream os;
  os << "catalog rows " << s.catalog_rows << ", rejected " << s.rejected_rows << ", unlabeled "
     << s.curation.unlabeled << ", conflicting " << s.curation.conflicts.size() << "\n";
  for (const auto& w : catalog.warnings) os << "warning: " << w << "\n";
  char line[160];
  std::snprintf(line, sizeof line, "%-5s %-24s %8s %8s %8s\n", "class", "name", "train", "test", "total");
  os << line;
  const auto counts = s.manifest.counts();
  std::size_t train_total = 0, test_total = 0;
  for (std::size_t c = 0; c < gz2::kNumClasses; ++c) {
    const std::size_t tr = counts[c][0], te = counts[c][1];
    train_total += tr;
    test_total += te;
    const std::string name(gz2::class_name(static_cast<int>(c)));
    std::snprintf(line, sizeof line, "%-5zu %-24s %8zu %8zu %8zu\n", c, name.c_str(), tr, te, tr + te);
    os << line;
  }
  std::snprintf(line, sizeof line, "%-5s %-24s %8zu %8zu %8zu\n", "all", "", train_total, test_total,
                train_total + test_total);
  os << line;
  s.text = os.str();
  return s;
}

TrainSummary run_train(const RunConfig& cfg, const std::string& manifest_path,
                       const std::string& image_dir, const std::string& out_dir,
                       const std::function<void(const train::EpochRecord&)>& on_epoch) {
  const scaling::ScaledArch arch = resolve_arch(cfg);
  train::TrainConfig tc = train_config(cfg, arch);
  const gz2::DatasetManifest manifest = gz2::load_manifest(manifest_path);
  if (cfg.mode == nn::HeadMode::kRegress && !manifest.has_targets()) {
    fail(ErrorCode::kSchema, "regression training needs a manifest with vote-fraction targets");
  }
  fs::create_directories(out_dir.empty() ? "." : out_dir);

  TrainSummary s;
  s.checkpoint_path = join(out_dir, "best.ckpt");
  s.history_path = join(out_dir, "history.csv");
  tc.checkpoint_path = s.checkpoint_path;
  io::write_file_atomic(join(out_dir, "run.cfg"), cfg.format());

  scaling::Network<float> net(arch, derive_seed(cfg.seed, {0x494e4954}));
  const auto loss = cfg.mode == nn::HeadMode::kClassify ? train::LossKind::kCrossEntropy
                                                        : train::LossKind::kRmse;
  s.fit = train::fit(net, manifest, image_dir, loss, tc, on_epoch);
  io::write_file_atomic(s.history_path, train::format_history_csv(s.fit.history));
  if (!s.fit.aborted.empty()) {
    fail(ErrorCode::kNumeric, "training aborted: ", s.fit.aborted);
  }

  std::ostringstream os;
  const char* metric = cfg.mode == nn::HeadMode::kClassify ? "accuracy" : "rmse";
  os << "epochs run " << s.fit.history.size() << (s.fit.stopped_early ? " (early stop)" : "") << "\n";
  if (s.fit.best_epoch > 0) {
    const auto& b = s.fit.history.at(s.fit.best_epoch - 1);
    os << "best epoch " << b.epoch << ": val loss " << fixed(b.val_loss, 5) << ", val " << metric << " "
       << fixed(b.val_metric, 4) << ", train " << metric << " " << fixed(b.train_metric, 4) << "\n";
    train::restore(s.fit.best, net);
  }
  std::vector<gz2::ManifestEntry> test;
  for (const auto& e : manifest.entries) {
    if (e.split == gz2::Split::kTest) test.push_back(e);
  }
  if (!test.empty()) {
    s.test = evaluate_entries(net, test, image_dir, tc.preprocessing, tc.batch_size, tc.threads);
    os << "test split (" << s.test->samples << " images):\n" << s.test->text;
  }
  os << "checkpoint " << s.checkpoint_path << "\n";
  s.text = os.str();
  return s;
}

LoadedModel load_model(const std::string& path) {
  LoadedModel m;
  m.checkpoint = train::load_checkpoint(path);
  m.arch = scaling::parse_arch(m.checkpoint.arch_text);
  m.net = std::make_unique<scaling::Network<float>>(m.arch, 0);
  train::restore(m.checkpoint, *m.net);
  return m;
}

EvalSummary evaluate(LoadedModel& model, const RunConfig& cfg, const std::string& manifest_path,
                     const std::string& image_dir, const std::string& split) {
  if (split != "train" && split != "test" && split != "all") {
    fail(ErrorCode::kInvalidArgument, "split must be train, test or all, got '", split, "'");
  }
  const gz2::DatasetManifest manifest = gz2::load_manifest(manifest_path);
  std::vector<gz2::ManifestEntry> entries;
  for (const auto& e : manifest.entries) {
    if (split == "all" || gz2::split_name(e.split) == split) entries.push_back(e);
  }
  const std::size_t batch = cfg.batch_size == 0 ? 32 : cfg.batch_size;
  return evaluate_entries(*model.net, std::move(entries), image_dir,
                          preprocessing_for(cfg, model.arch), batch, cfg.threads);
}

std::size_t predict_dir(LoadedModel& model, const RunConfig& cfg, const std::string& image_dir,
                        const std::string& out_csv) {
  if (model.arch.head.mode != nn::HeadMode::kRegress) {
    fail(ErrorCode::kConfiguration, "submissions need a regression checkpoint (37 outputs)");
  }
  if (!fs::is_directory(image_dir)) fail(ErrorCode::kNotFound, "image directory ", image_dir, " not found");
  std::vector<fs::path> files;
  for (const auto& de : fs::directory_iterator(image_dir)) {
    if (!de.is_regular_file()) continue;
    std::string ext = de.path().extension().string();
    std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
    if (ext == ".png" || ext == ".jpg" || ext == ".jpeg") files.push_back(de.path());
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) fail(ErrorCode::kNotFound, "no .png or .jpg images in ", image_dir);

  std::vector<gz2::ManifestEntry> entries;
  std::vector<std::string> ids;
  for (const auto& f : files) {
    gz2::ManifestEntry e;
    e.galaxy_id = f.stem().string();
    e.path = f.string();
    e.label = -1;
    ids.push_back(e.galaxy_id);
    entries.push_back(std::move(e));
  }
  train::ImageDataset data(std::move(entries), "", preprocessing_for(cfg, model.arch), cfg.threads);
  std::vector<std::size_t> idx(data.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const std::size_t batch = cfg.batch_size == 0 ? 32 : cfg.batch_size;
  const auto pred = train::predict(*model.net, data, idx, batch);
  std::vector<double> flat;
  for (const auto& row : pred) flat.insert(flat.end(), row.begin(), row.end());
  io::write_file_atomic(out_csv, metrics::format_submission(ids, flat));
  return ids.size();
}

ScaleInfo scale_info(const scaling::ScalingCoefficients& c) {
  c.validate();
  ScaleInfo s;
  const scaling::ScaledArch base = scaling::baseline_arch();
  s.arch = scaling::scale_arch(base, c);
  s.flops = scaling::estimate_flops(s.arch);
  s.baseline_flops = scaling::estimate_flops(base);
  s.constraint_deviation = scaling::check_constraint(c);

  std::ostringstream os;
  os << "alpha " << text::format_real(c.alpha) << "  beta " << text::format_real(c.beta) << "  gamma "
     << text::format_real(c.gamma) << "  phi " << text::format_real(c.phi) << "\n";
  os << "resolution " << s.arch.resolution << "\n";
  char line[160];
  std::snprintf(line, sizeof line, "%-6s %-7s %6s %6s %8s %6s %9s\n", "stage", "block", "kernel", "stride",
                "channels", "layers", "expansion");
  os << line;
  for (std::size_t i = 0; i < s.arch.stages.size(); ++i) {
    const auto& st = s.arch.stages[i];
    const std::string kind(scaling::block_kind_name(st.kind));
    std::snprintf(line, sizeof line, "%-6zu %-7s %6zu %6zu %8zu %6zu %9zu\n", i, kind.c_str(), st.kernel,
                  st.stride, st.channels, st.layers, st.expansion);
    os << line;
  }
  char buf[200];
  std::snprintf(buf, sizeof buf, "flops %.4g (baseline %.4g, ratio %.4f)\n", s.flops, s.baseline_flops,
                s.flops / s.baseline_flops);
  os << buf;
  std::snprintf(buf, sizeof buf, "constraint alpha*beta^2*gamma^2 - 2 = %.4f\n", s.constraint_deviation);
  os << buf;
  s.text = os.str();
  return s;
}

std::vector<std::string> export_feature_maps(LoadedModel& model, const RunConfig& cfg,
                                             const std::string& image_path,
                                             const std::vector<std::string>& layers,
                                             const std::string& out_dir) {
  const gz2::Image input = train::preprocess(gz2::load_image(image_path), preprocessing_for(cfg, model.arch));
  metrics::FeatureMapOptions opt;
  opt.channels = cfg.featmap_channels;
  opt.columns = cfg.featmap_columns;
  opt.seed = cfg.seed;
  const auto grids = metrics::feature_maps(*model.net, input, layers, opt);
  fs::create_directories(out_dir.empty() ? "." : out_dir);
  std::vector<std::string> written;
  for (const auto& g : grids) {
    const std::string path = join(out_dir, "featmap_" + g.layer + ".png");
    gz2::write_png(path, g.raster);
    written.push_back(path);
  }
  return written;
}

EnsembleSummary ensemble(const std::vector<std::string>& inputs, const std::string& out_csv,
                         const std::string& targets_catalog) {
  if (inputs.empty()) fail(ErrorCode::kInvalidArgument, "ensemble needs at least one submission");
  std::vector<metrics::Submission> subs;
  for (const auto& path : inputs) {
    subs.push_back(metrics::parse_submission(io::read_file(path)));
    if (subs.back().ids != subs.front().ids) {
      fail(ErrorCode::kSchema, "submission ", path, " lists different galaxy ids than ", inputs.front());
    }
  }
  std::vector<std::vector<double>> members;
  for (const auto& s : subs) members.push_back(s.values);
  const std::vector<double> avg = metrics::ensemble_average(members);
  io::write_file_atomic(out_csv, metrics::format_submission(subs.front().ids, avg));

  EnsembleSummary s;
  s.rows = subs.front().ids.size();
  std::ostringstream os;
  os << "averaged " << inputs.size() << " submissions over " << s.rows << " galaxies\n";
  if (!targets_catalog.empty()) {
    const gz2::Catalog cat = gz2::load_catalog(targets_catalog);
    std::map<std::string, const gz2::CatalogRow*> by_id;
    for (const auto& r : cat.rows) by_id[r.galaxy_id] = &r;
    std::vector<double> target;
    for (const auto& id : subs.front().ids) {
      const auto it = by_id.find(id);
      if (it == by_id.end()) fail(ErrorCode::kNotFound, "galaxy ", id, " missing from ", targets_catalog);
      target.insert(target.end(), it->second->fractions.begin(), it->second->fractions.end());
    }
    for (std::size_t i = 0; i < members.size(); ++i) {
      s.member_rmse.push_back(metrics::rmse(members[i], target, gz2::kNumAnswers).rmse);
      os << "member " << inputs[i] << " rmse " << fixed(s.member_rmse.back(), 5) << "\n";
    }
    s.ensemble_rmse = metrics::rmse(avg, target, gz2::kNumAnswers).rmse;
    os << "ensemble rmse " << fixed(*s.ensemble_rmse, 5) << "\n";
  }
  os << "wrote " << out_csv << "\n";
  s.text = os.str();
  return s;
}

}  // namespace morphnet::app
