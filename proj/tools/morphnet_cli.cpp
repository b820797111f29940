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


// Command-line front end. Talks to the library only through its C API.

#include <cinttypes>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "morphnet/morphnet.h"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct Failure {
  int code;
};

int exit_code(mn_status s) {
  return (s == MN_NUMERIC_ERROR || s == MN_INTERNAL_ERROR) ? kExitFailure : kExitUsage;
}

void check(mn_status s) {
  if (s == MN_OK) return;
  std::fprintf(stderr, "error (%s): %s\n", mn_status_name(s), mn_last_error());
  throw Failure{exit_code(s)};
}

[[noreturn]] void usage_error(const std::string& msg) {
  std::fprintf(stderr, "error: %s\n", msg.c_str());
  throw Failure{kExitUsage};
}

// Owns a string handed out by the library.
struct Text {
  char* p = nullptr;
  ~Text() { mn_string_free(p); }
  char** out() { return &p; }
  void print(std::FILE* f = stdout) const {
    if (p != nullptr) std::fputs(p, f);
  }
  std::string str() const { return p != nullptr ? p : ""; }
};

struct Config {
  mn_config* h = nullptr;
  Config() { check(mn_config_create(&h)); }
  ~Config() { mn_config_destroy(h); }
  Config(const Config&) = delete;
  Config& operator=(const Config&) = delete;

  void set(const std::string& key, const std::string& value) { check(mn_config_set(h, key.c_str(), value.c_str())); }
  std::string get(const std::string& key) const {
    Text t;
    check(mn_config_get(h, key.c_str(), t.out()));
    return t.str();
  }
};

struct Model {
  mn_model* h = nullptr;
  explicit Model(const std::string& path) { check(mn_model_load(path.c_str(), &h)); }
  ~Model() { mn_model_destroy(h); }
  Model(const Model&) = delete;
  Model& operator=(const Model&) = delete;
};

// Options every subcommand shares.
struct Common {
  std::string config_file;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
};

void add_common(CLI::App* cmd, Common& c) {
  cmd->add_option("--config", c.config_file, "Run configuration file (section.key = value)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--set", c.overrides, "Override one config key, KEY=VALUE (repeatable)");
  cmd->add_option("--seed", c.seed, "Root seed for every random stream");
}

// File values first, then --set, then the command's own flags.
void apply_common(Config& cfg, const Common& c) {
  if (!c.config_file.empty()) check(mn_config_load(cfg.h, c.config_file.c_str()));
  for (const auto& kv : c.overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) usage_error("--set expects KEY=VALUE, got '" + kv + "'");
    cfg.set(kv.substr(0, eq), kv.substr(eq + 1));
  }
  if (c.seed) cfg.set("run.seed", std::to_string(*c.seed));
  std::fprintf(stderr, "root seed %s\n", cfg.get("run.seed").c_str());
}

// Flag value, else the config key, else a usage error.
std::string path_or_config(const std::string& flag_value, const Config& cfg, const std::string& key,
                           const std::string& flag) {
  if (!flag_value.empty()) return flag_value;
  std::string v = cfg.get(key);
  if (v.empty()) usage_error(flag + " is required (or set " + key + ")");
  return v;
}

std::vector<std::string> split_commas(const std::vector<std::string>& items) {
  std::vector<std::string> out;
  for (const auto& item : items) {
    std::size_t start = 0;
    while (start <= item.size()) {
      const auto end = item.find(',', start);
      const auto part = item.substr(start, end == std::string::npos ? std::string::npos : end - start);
      if (!part.empty()) out.push_back(part);
      if (end == std::string::npos) break;
      start = end + 1;
    }
  }
  return out;
}

void print_epoch(const mn_epoch* e, void*) {
  std::printf("epoch %3zu  lr %.3g  train loss %.5f  val loss %.5f  train %.4f  val %.4f%s\n", e->epoch, e->lr,
              e->train_loss, e->val_loss, e->train_metric, e->val_metric, e->improved ? "  *" : "");
  std::fflush(stdout);
}

void print_case(const char* name, double rel, size_t checked, int passed, void*) {
  std::printf("%-22s %-4s max rel %.3e  checked %zu\n", name, passed ? "ok" : "FAIL", rel, checked);
  std::fflush(stdout);
}

int run(int argc, char** argv) {
  CLI::App app{"Galaxy morphology classification with compound-scaled convolutional networks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(mn_version()));

  // curate
  Common curate_c;
  std::string catalog, out_manifest, rules, curate_images, curate_mode;
  bool or_mode = false;
  auto* curate = app.add_subcommand("curate", "Select clean samples from a vote-fraction catalog and split 9:1");
  add_common(curate, curate_c);
  curate->add_option("--catalog", catalog, "Vote-fraction catalog CSV");
  curate->add_option("--out-manifest", out_manifest, "Manifest to write")->required();
  curate->add_option("--rules", rules, "Selection rule file (default: built-in rules)");
  curate->add_option("--image-dir", curate_images, "Directory prefixed to manifest image paths");
  curate->add_option("--mode", curate_mode, "classify, or regress to attach vote fractions")
      ->check(CLI::IsMember({"classify", "regress"}));
  curate->add_flag("--or-mode-class6", or_mode, "Class 6 matches any single irregular answer");

  // train
  Common train_c;
  std::string train_manifest, train_images, variant, mode, out_dir;
  std::optional<std::size_t> epochs, batch;
  std::optional<double> lr;
  auto* train = app.add_subcommand("train", "Train a network and keep the best checkpoint");
  add_common(train, train_c);
  train->add_option("--manifest", train_manifest, "Dataset manifest");
  train->add_option("--image-dir", train_images, "Root for relative image paths");
  train->add_option("--variant", variant, "Model preset")
      ->check(CLI::IsMember({"b0", "b1", "b2", "b3", "b4", "b5", "b6", "b7", "toy", "scaled"}));
  train->add_option("--mode", mode, "classify (7 classes) or regress (37 vote fractions)")
      ->check(CLI::IsMember({"classify", "regress"}));
  train->add_option("--out-dir", out_dir, "Directory for checkpoint, history and run config");
  train->add_option("--epochs", epochs, "Epoch limit");
  train->add_option("--batch-size", batch, "Batch size (default: preset's)");
  train->add_option("--lr", lr, "Initial learning rate");

  // eval
  Common eval_c;
  std::string eval_manifest, eval_ckpt, eval_images, split = "test", json_out;
  auto* eval = app.add_subcommand("eval", "Score a checkpoint on a manifest split");
  add_common(eval, eval_c);
  eval->add_option("--manifest", eval_manifest, "Dataset manifest");
  eval->add_option("--checkpoint", eval_ckpt, "Checkpoint file")->required();
  eval->add_option("--image-dir", eval_images, "Root for relative image paths");
  eval->add_option("--split", split, "train, test or all")->check(CLI::IsMember({"train", "test", "all"}));
  eval->add_option("--json", json_out, "Also write the report as JSON");

  // predict
  Common predict_c;
  std::string predict_images, predict_ckpt, predict_out;
  auto* predict = app.add_subcommand("predict", "Write a vote-fraction submission for a directory of images");
  add_common(predict, predict_c);
  predict->add_option("--image-dir", predict_images, "Images to score")->required();
  predict->add_option("--checkpoint", predict_ckpt, "Regression checkpoint")->required();
  predict->add_option("--out", predict_out, "Submission CSV")->required();

  // scale-info
  double alpha = 1.2, beta = 1.1, gamma = 1.15, phi = 0.0;
  auto* scale = app.add_subcommand("scale-info", "Print the compound-scaled stage table and FLOPS estimate");
  scale->add_option("--alpha", alpha, "Depth coefficient")->capture_default_str();
  scale->add_option("--beta", beta, "Width coefficient")->capture_default_str();
  scale->add_option("--gamma", gamma, "Resolution coefficient")->capture_default_str();
  scale->add_option("--phi", phi, "Compound exponent")->capture_default_str();

  // gradcheck
  mn_gradcheck_options gopt;
  mn_gradcheck_defaults(&gopt);
  std::vector<std::string> cases;
  bool list_cases = false;
  auto* grad = app.add_subcommand("gradcheck", "Finite-difference check of every op, block and a small network");
  grad->add_option("--eps", gopt.eps, "Central-difference step")->capture_default_str();
  grad->add_option("--seeds", gopt.seeds, "Random draws per case")->capture_default_str();
  grad->add_option("--seed", gopt.seed, "Root seed")->capture_default_str();
  grad->add_option("--tolerance", gopt.tolerance, "Maximum relative error")->capture_default_str();
  grad->add_option("--cases", cases, "Only these cases (comma separated)");
  grad->add_flag("--list", list_cases, "List case names and exit");

  // featmap
  Common feat_c;
  std::string feat_ckpt, feat_image, feat_out = "featmaps";
  std::vector<std::string> layers;
  bool list_layers = false;
  auto* feat = app.add_subcommand("featmap", "Render sampled intermediate activations as image grids");
  add_common(feat, feat_c);
  feat->add_option("--checkpoint", feat_ckpt, "Checkpoint file")->required();
  feat->add_option("--image", feat_image, "Input image");
  feat->add_option("--layers", layers, "Layer names (comma separated or repeated)");
  feat->add_option("--out-dir", feat_out, "Output directory")->capture_default_str();
  feat->add_flag("--list-layers", list_layers, "List layer names and exit");

  // make-synthetic
  std::string syn_dir;
  std::size_t syn_count = 200, syn_size = 32;
  std::uint64_t syn_seed = 0;
  auto* syn = app.add_subcommand("make-synthetic", "Render a procedural 7-class image set with catalog and manifest");
  syn->add_option("--out-dir", syn_dir, "Output directory")->required();
  syn->add_option("--count", syn_count, "Number of images")->capture_default_str();
  syn->add_option("--size", syn_size, "Image side in pixels")->capture_default_str();
  syn->add_option("--seed", syn_seed, "Root seed")->capture_default_str();

  // ensemble
  std::vector<std::string> inputs;
  std::string ens_out, targets;
  auto* ens = app.add_subcommand("ensemble", "Average submissions, optionally scoring against a catalog");
  ens->add_option("--inputs", inputs, "Submission files")->required();
  ens->add_option("--out", ens_out, "Averaged submission")->required();
  ens->add_option("--targets", targets, "Catalog with true vote fractions");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    CLI::App* sub = app.get_subcommands().empty() ? &app : app.get_subcommands().front();
    std::fprintf(stderr, "\n%s", sub->help().c_str());
    return kExitUsage;
  }

  if (curate->parsed()) {
    Config cfg;
    apply_common(cfg, curate_c);
    if (!rules.empty()) cfg.set("paths.rules", rules);
    if (!curate_images.empty()) cfg.set("paths.image_dir", curate_images);
    if (!curate_mode.empty()) cfg.set("model.mode", curate_mode);
    if (or_mode) cfg.set("curate.or_mode_class6", "true");
    const std::string cat = path_or_config(catalog, cfg, "paths.catalog", "--catalog");
    Text report;
    check(mn_curate(cfg.h, cat.c_str(), out_manifest.c_str(), nullptr, report.out()));
    report.print();
    std::printf("wrote %s\n", out_manifest.c_str());
  } else if (train->parsed()) {
    Config cfg;
    apply_common(cfg, train_c);
    if (!variant.empty()) cfg.set("model.variant", variant);
    if (!mode.empty()) cfg.set("model.mode", mode);
    if (epochs) cfg.set("train.epochs", std::to_string(*epochs));
    if (batch) cfg.set("train.batch_size", std::to_string(*batch));
    if (lr) cfg.set("train.lr", CLI::detail::to_string(*lr));
    const std::string manifest = path_or_config(train_manifest, cfg, "paths.manifest", "--manifest");
    const std::string images = train_images.empty() ? cfg.get("paths.image_dir") : train_images;
    const std::string dir = path_or_config(out_dir, cfg, "paths.checkpoint_dir", "--out-dir");
    Text report;
    check(mn_train(cfg.h, manifest.c_str(), images.c_str(), dir.c_str(), print_epoch, nullptr, report.out()));
    report.print();
  } else if (eval->parsed()) {
    Config cfg;
    apply_common(cfg, eval_c);
    const std::string manifest = path_or_config(eval_manifest, cfg, "paths.manifest", "--manifest");
    const std::string images = eval_images.empty() ? cfg.get("paths.image_dir") : eval_images;
    Model model(eval_ckpt);
    Text text, json;
    check(mn_eval(model.h, cfg.h, manifest.c_str(), images.c_str(), split.c_str(), nullptr, text.out(),
                  json.out()));
    text.print();
    if (!json_out.empty()) {
      std::FILE* f = std::fopen(json_out.c_str(), "wb");
      if (f == nullptr) usage_error("cannot write " + json_out);
      json.print(f);
      std::fclose(f);
    }
  } else if (predict->parsed()) {
    Config cfg;
    apply_common(cfg, predict_c);
    Model model(predict_ckpt);
    size_t rows = 0;
    check(mn_predict(model.h, cfg.h, predict_images.c_str(), predict_out.c_str(), &rows));
    std::printf("wrote %zu predictions to %s\n", rows, predict_out.c_str());
  } else if (scale->parsed()) {
    Text text;
    check(mn_scale_info(alpha, beta, gamma, phi, nullptr, text.out()));
    text.print();
  } else if (grad->parsed()) {
    if (list_cases) {
      Text names;
      check(mn_gradcheck_cases(names.out()));
      names.print();
      return kExitOk;
    }
    std::string only;
    for (const auto& c : split_commas(cases)) only += (only.empty() ? "" : ",") + c;
    int passed = 0;
    double worst = 0;
    Text report;
    check(mn_gradcheck(&gopt, only.empty() ? nullptr : only.c_str(), print_case, nullptr, &passed, &worst,
                       report.out()));
    const std::string r = report.str();
    const auto last = r.find_last_of('\n', r.size() >= 2 ? r.size() - 2 : 0);
    std::fputs(r.substr(last == std::string::npos ? 0 : last + 1).c_str(), stdout);
    return passed ? kExitOk : kExitFailure;
  } else if (feat->parsed()) {
    Config cfg;
    apply_common(cfg, feat_c);
    Model model(feat_ckpt);
    if (list_layers) {
      Text names;
      check(mn_model_layers(model.h, names.out()));
      names.print();
      return kExitOk;
    }
    if (feat_image.empty()) usage_error("--image is required");
    const auto names = split_commas(layers);
    if (names.empty()) usage_error("--layers needs at least one layer name");
    std::vector<const char*> ptrs;
    for (const auto& n : names) ptrs.push_back(n.c_str());
    Text written;
    check(mn_featmap(model.h, cfg.h, feat_image.c_str(), ptrs.data(), ptrs.size(), feat_out.c_str(),
                     written.out()));
    written.print();
  } else if (syn->parsed()) {
    std::fprintf(stderr, "root seed %" PRIu64 "\n", syn_seed);
    check(mn_make_synthetic(syn_dir.c_str(), syn_count, syn_size, syn_seed));
    std::printf("wrote %zu images, catalog.csv and manifest.csv to %s\n", syn_count, syn_dir.c_str());
  } else if (ens->parsed()) {
    std::vector<const char*> ptrs;
    for (const auto& in : inputs) ptrs.push_back(in.c_str());
    Text report;
    check(mn_ensemble(ptrs.data(), ptrs.size(), ens_out.c_str(), targets.empty() ? nullptr : targets.c_str(),
                      nullptr, report.out()));
    report.print();
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run(argc, argv);
  } catch (const Failure& f) {
    return f.code;
  }
}
