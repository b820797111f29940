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

#include "train/fit.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "autodiff/ops.hpp"
#include "common/error.hpp"
#include "common/text.hpp"

namespace morphnet::train {
namespace {

constexpr std::uint64_t kShuffleStream = 0x5348;
constexpr std::uint64_t kDropoutStream = 0x4452;
constexpr std::uint64_t kAugmentStream = 0x4155;

struct Evaluation {
  double loss = 0;
  double metric = 0;
};

Evaluation evaluate(scaling::Network<float>& net, const ImageDataset& data,
                    const std::vector<std::size_t>& indices, LossKind loss_kind,
                    std::size_t batch_size) {
  const nn::HeadMode mode = net.arch().head.mode;
  Rng unused(0);
  double loss_sum = 0, sq_sum = 0;
  std::size_t correct = 0, count = 0, values = 0;
  BatchLoader loader(data, indices, batch_size, mode, std::nullopt, 0, 0);
  while (auto batch = loader.next()) {
    ad::Tape<float> tape;
    const ad::Var x = tape.constant(batch->inputs);
    const ad::Var y = tape.constant(batch->targets);
    const ad::Var out = net.forward(tape, x, false, unused);
    const ad::Var loss = loss_kind == LossKind::kCrossEntropy ? ad::cross_entropy(tape, out, y)
                                                              : ad::rmse_loss(tape, out, y);
    const std::size_t b = batch->indices.size();
    const double l = tape.value(loss)[0];
    loss_sum += loss_kind == LossKind::kCrossEntropy ? l * static_cast<double>(b)
                                                     : l * l * static_cast<double>(b);
    const auto& p = tape.value(out);
    const std::size_t k = p.dim(1);
    for (std::size_t i = 0; i < b; ++i) {
      const float* row = p.raw() + i * k;
      if (mode == nn::HeadMode::kClassify) {
        const auto arg = static_cast<int>(std::max_element(row, row + k) - row);
        if (arg == batch->labels[i]) ++correct;
      } else {
        for (std::size_t j = 0; j < k; ++j) {
          const double d = static_cast<double>(row[j]) - batch->targets[i * k + j];
          sq_sum += d * d;
        }
        values += k;
      }
    }
    count += b;
  }
  Evaluation e;
  if (count == 0) return e;
  if (loss_kind == LossKind::kCrossEntropy) {
    e.loss = loss_sum / static_cast<double>(count);
  } else {
    e.loss = std::sqrt(loss_sum / static_cast<double>(count));
  }
  e.metric = mode == nn::HeadMode::kClassify
                 ? static_cast<double>(correct) / static_cast<double>(count)
                 : std::sqrt(sq_sum / static_cast<double>(values));
  return e;
}

}  // namespace

void TrainConfig::validate() const {
  if (epochs == 0 || batch_size == 0) {
    fail(ErrorCode::kInvalidArgument, "epochs and batch size must be positive");
  }
  if (!(lr >= 0.0) || !std::isfinite(lr)) {
    fail(ErrorCode::kInvalidArgument, "learning rate must be finite and non-negative");
  }
  if (!(validation_fraction > 0.0 && validation_fraction < 1.0)) {
    fail(ErrorCode::kInvalidArgument, "validation fraction must be in (0, 1)");
  }
  if (!(plateau_factor > 0.0 && plateau_factor < 1.0)) {
    fail(ErrorCode::kInvalidArgument, "plateau factor must be in (0, 1)");
  }
  if (augmentation) augmentation->validate();
}

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> carve_validation(
    const std::vector<gz2::ManifestEntry>& entries, double fraction, std::uint64_t seed) {
  std::map<int, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < entries.size(); ++i) groups[entries[i].label].push_back(i);
  std::vector<std::size_t> fit_idx, val_idx;
  for (auto& [label, members] : groups) {
    Rng rng(derive_seed(seed, {0x56414c, static_cast<std::uint64_t>(label + 1)}));
    rng.shuffle(members);
    std::size_t n_val = 0;
    if (members.size() >= 2) {
      n_val = std::max<std::size_t>(
          1, static_cast<std::size_t>(std::floor(fraction * static_cast<double>(members.size()))));
    }
    val_idx.insert(val_idx.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_val));
    fit_idx.insert(fit_idx.end(), members.begin() + static_cast<std::ptrdiff_t>(n_val), members.end());
  }
  std::sort(fit_idx.begin(), fit_idx.end());
  std::sort(val_idx.begin(), val_idx.end());
  return {fit_idx, val_idx};
}

FitResult fit(scaling::Network<float>& net, const gz2::DatasetManifest& manifest,
              const std::string& image_root, LossKind loss_kind, const TrainConfig& cfg,
              const std::function<void(const EpochRecord&)>& on_epoch) {
  cfg.validate();
  const nn::HeadMode mode = net.arch().head.mode;
  if ((mode == nn::HeadMode::kClassify) != (loss_kind == LossKind::kCrossEntropy)) {
    fail(ErrorCode::kConfiguration,
         "cross-entropy pairs with the classification head, rmse with regression");
  }
  std::vector<gz2::ManifestEntry> train_entries;
  for (const auto& e : manifest.entries) {
    if (e.split == gz2::Split::kTrain) train_entries.push_back(e);
  }
  if (train_entries.empty()) fail(ErrorCode::kInvalidArgument, "manifest has no training entries");

  ImageDataset data(train_entries, image_root, cfg.preprocessing, cfg.threads);
  require_images(data);
  if (cfg.cache_images) data.cache_all();

  auto [fit_idx, val_idx] = carve_validation(train_entries, cfg.validation_fraction, cfg.seed);
  if (val_idx.empty() || fit_idx.empty()) {
    fail(ErrorCode::kInvalidArgument, "training split too small to hold out validation data");
  }

  Adam<float> adam(AdamConfig{cfg.lr});
  PlateauSchedule plateau;
  plateau.initial_lr = cfg.lr;
  plateau.factor = cfg.plateau_factor;
  plateau.patience = cfg.plateau_patience;
  plateau.min_lr = std::min(cfg.min_lr, cfg.lr);
  EarlyStop stopper;
  stopper.patience = cfg.early_stop_patience;

  FitResult result;
  double best_val = std::numeric_limits<double>::infinity();
  const auto params = net.parameters();

  for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
    EpochRecord rec;
    rec.epoch = epoch;
    rec.lr = adam.lr();

    std::vector<std::size_t> order = fit_idx;
    Rng shuffle_rng(derive_seed(cfg.seed, {kShuffleStream, epoch}));
    shuffle_rng.shuffle(order);
    BatchLoader loader(data, order, cfg.batch_size, mode, cfg.augmentation,
                       derive_seed(cfg.seed, {kAugmentStream}), epoch);
    double loss_sum = 0;
    std::size_t seen = 0, batch_no = 0;
    while (auto batch = loader.next()) {
      for (auto* p : params) p->zero_grad();
      ad::Tape<float> tape;
      Rng dropout_rng(derive_seed(cfg.seed, {kDropoutStream, epoch, batch_no++}));
      const ad::Var x = tape.constant(batch->inputs);
      const ad::Var y = tape.constant(batch->targets);
      const ad::Var out = net.forward(tape, x, true, dropout_rng);
      const ad::Var loss = loss_kind == LossKind::kCrossEntropy ? ad::cross_entropy(tape, out, y)
                                                                : ad::rmse_loss(tape, out, y);
      const double l = tape.value(loss)[0];
      if (!std::isfinite(l)) {
        result.aborted = "non-finite training loss at epoch " + std::to_string(epoch);
        return result;
      }
      tape.backward(loss);
      try {
        adam.step(params);
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kNumeric) throw;
        result.aborted = std::string(e.what()) + " at epoch " + std::to_string(epoch);
        return result;
      }
      loss_sum += l * static_cast<double>(batch->indices.size());
      seen += batch->indices.size();
    }
    rec.train_loss = loss_sum / static_cast<double>(seen);

    const Evaluation val = evaluate(net, data, val_idx, loss_kind, cfg.batch_size);
    rec.val_loss = val.loss;
    rec.val_metric = val.metric;
    if (cfg.evaluate_train) rec.train_metric = evaluate(net, data, fit_idx, loss_kind, cfg.batch_size).metric;
    if (!std::isfinite(rec.val_loss)) {
      result.aborted = "non-finite validation loss at epoch " + std::to_string(epoch);
      result.history.push_back(rec);
      return result;
    }

    if (rec.val_loss < best_val) {
      best_val = rec.val_loss;
      rec.improved = true;
      result.best_epoch = epoch;
      TrainState state{epoch, rec.val_loss, adam.steps(), adam.lr(), cfg.seed};
      result.best = capture(net, &adam, state);
      if (!cfg.checkpoint_path.empty()) save_checkpoint(cfg.checkpoint_path, result.best);
    }
    result.history.push_back(rec);
    if (on_epoch) on_epoch(rec);

    if (plateau.step(rec.val_loss)) adam.set_lr(plateau.lr());
    if (cfg.early_stopping && stopper.step(rec.val_loss)) {
      result.stopped_early = epoch < cfg.epochs;
      break;
    }
  }
  return result;
}

std::vector<std::vector<float>> predict(scaling::Network<float>& net, const ImageDataset& data,
                                        const std::vector<std::size_t>& indices,
                                        std::size_t batch_size) {
  std::vector<std::vector<float>> out;
  Rng unused(0);
  BatchLoader loader(data, indices, batch_size, std::nullopt, std::nullopt, 0, 0);
  while (auto batch = loader.next()) {
    ad::Tape<float> tape;
    const ad::Var y = net.forward(tape, tape.constant(batch->inputs), false, unused);
    const auto& p = tape.value(y);
    const std::size_t k = p.dim(1);
    for (std::size_t i = 0; i < batch->indices.size(); ++i) {
      out.emplace_back(p.raw() + i * k, p.raw() + (i + 1) * k);
    }
  }
  return out;
}

std::string format_history_csv(const std::vector<EpochRecord>& history) {
  std::ostringstream os;
  os << "epoch,lr,train_loss,val_loss,train_metric,val_metric,improved\n";
  for (const EpochRecord& r : history) {
    os << r.epoch << ',' << text::format_real(r.lr) << ',' << text::format_real(r.train_loss)
       << ',' << text::format_real(r.val_loss) << ',' << text::format_real(r.train_metric)
       << ',' << text::format_real(r.val_metric) << ',' << (r.improved ? 1 : 0) << '\n';
  }
  return os.str();
}

}  // namespace morphnet::train
