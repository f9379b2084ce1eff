// Copyright (c) 2026 The deepstreets Authors. All rights reserved.
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

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <numeric>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "deepstreets/config.hpp"
#include "deepstreets/dataset.hpp"
#include "deepstreets/media.hpp"
#include "deepstreets/model.hpp"
#include "deepstreets/random.hpp"

namespace deepstreets {

struct TrainConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int batch_size = 8;
  int patience = 10;
  int max_epochs = 0;  // required, no default
  std::uint64_t seed = 0;

  void validate() const {
    if (!(learning_rate > 0.0)) throw DataError("learning_rate must be > 0");
    if (!(beta1 >= 0.0 && beta1 < 1.0)) throw DataError("beta1 must lie in [0, 1)");
    if (!(beta2 >= 0.0 && beta2 < 1.0)) throw DataError("beta2 must lie in [0, 1)");
    if (!(epsilon > 0.0)) throw DataError("epsilon must be > 0");
    if (batch_size < 1) throw DataError("batch_size must be >= 1");
    if (patience < 1) throw DataError("patience must be >= 1");
    if (max_epochs < 1) throw DataError("max_epochs must be >= 1");
  }
};

inline const std::set<std::string>& train_config_keys() {
  static const std::set<std::string> keys{"learning_rate", "beta1",    "beta2",      "epsilon",
                                          "batch_size",    "patience", "max_epochs", "seed"};
  return keys;
}

/// Reads the TrainConfig keys of `kv`; other keys are left to the caller.
inline TrainConfig train_config_from(const KeyValueConfig& kv) {
  TrainConfig c;
  c.learning_rate = kv.get_double("learning_rate", c.learning_rate);
  c.beta1 = kv.get_double("beta1", c.beta1);
  c.beta2 = kv.get_double("beta2", c.beta2);
  c.epsilon = kv.get_double("epsilon", c.epsilon);
  c.batch_size = static_cast<int>(kv.get_int("batch_size", c.batch_size));
  c.patience = static_cast<int>(kv.get_int("patience", c.patience));
  c.max_epochs = static_cast<int>(kv.get_int("max_epochs"));
  c.seed = static_cast<std::uint64_t>(kv.get_int("seed", 0));
  c.validate();
  return c;
}

/// Strict form for standalone TrainConfig files: unknown keys are rejected.
inline TrainConfig parse_train_config(const KeyValueConfig& kv) {
  kv.reject_unknown(train_config_keys());
  return train_config_from(kv);
}

// ---------------------------------------------------------------------------
// Loss

template <typename T>
struct LossResult {
  double loss = 0.0;
  Tensor<T> dlogits;  // (n, 2, 1, 1)
  int correct = 0;    // argmax-with-ties-to-fake agreements
};

/// Mean softmax cross-entropy over the batch. Gradient is
/// (softmax - one_hot) / batch_size.
template <typename T>
LossResult<T> compute_loss(const Tensor<T>& logits, std::span<const Label> labels) {
  if (logits.n == 0 || labels.empty()) throw DataError("compute_loss: empty batch");
  if (logits.c != kNumClasses || logits.n != static_cast<int>(labels.size()))
    throw ShapeError("compute_loss: logits " + logits.shape_string() + " vs " + std::to_string(labels.size()) +
                     " labels");
  LossResult<T> r;
  r.dlogits = Tensor<T>(logits.n, kNumClasses, 1, 1);
  const double inv_n = 1.0 / logits.n;
  for (int i = 0; i < logits.n; ++i) {
    const double a = logits.at(i, 0, 0, 0), b = logits.at(i, 1, 0, 0);
    const double m = std::max(a, b);
    const double lse = m + std::log(std::exp(a - m) + std::exp(b - m));
    const int y = labels[static_cast<std::size_t>(i)] == Label::Fake ? 1 : 0;
    r.loss += (lse - (y ? b : a)) * inv_n;
    const double p_fake = std::exp(b - lse), p_real = std::exp(a - lse);
    r.dlogits.at(i, 0, 0, 0) = static_cast<T>((p_real - (y == 0)) * inv_n);
    r.dlogits.at(i, 1, 0, 0) = static_cast<T>((p_fake - (y == 1)) * inv_n);
    r.correct += (label_for_score(p_fake) == labels[static_cast<std::size_t>(i)]);
  }
  return r;
}

// ---------------------------------------------------------------------------
// Adam

template <typename T>
struct OptimizerState {
  std::vector<std::vector<T>> m;
  std::vector<std::vector<T>> v;
  std::int64_t t = 0;

  OptimizerState() = default;
  explicit OptimizerState(const std::vector<Parameter<T>>& params) {
    for (const auto& p : params) {
      m.emplace_back(p.numel(), T(0));
      v.emplace_back(p.numel(), T(0));
    }
  }
};

/// One bias-corrected Adam update of a flat parameter block at step `t`
/// (1-based, already incremented).
template <typename T>
void adam_update(std::span<T> w, std::span<const T> g, std::span<T> m, std::span<T> v, std::int64_t t,
                 const TrainConfig& cfg) {
  const T b1 = static_cast<T>(cfg.beta1), b2 = static_cast<T>(cfg.beta2);
  const T lr = static_cast<T>(cfg.learning_rate), eps = static_cast<T>(cfg.epsilon);
  const T c1 = T(1) - static_cast<T>(std::pow(cfg.beta1, static_cast<double>(t)));
  const T c2 = T(1) - static_cast<T>(std::pow(cfg.beta2, static_cast<double>(t)));
  for (std::size_t i = 0; i < w.size(); ++i) {
    m[i] = b1 * m[i] + (T(1) - b1) * g[i];
    v[i] = b2 * v[i] + (T(1) - b2) * g[i] * g[i];
    const T mhat = m[i] / c1;
    const T vhat = v[i] / c2;
    w[i] -= lr * mhat / (std::sqrt(vhat) + eps);
  }
}

/// Updates every parameter from its accumulated gradient. A non-finite
/// gradient aborts before anything is modified.
template <typename T>
void adam_step(std::vector<Parameter<T>>& params, OptimizerState<T>& state, const TrainConfig& cfg) {
  if (state.m.size() != params.size()) throw ShapeError("adam_step: optimizer state does not match parameters");
  for (const auto& p : params)
    for (T g : p.grad)
      if (!std::isfinite(g)) throw RuntimeFailure("adam_step: non-finite gradient in " + p.name);
  ++state.t;
  for (std::size_t i = 0; i < params.size(); ++i)
    adam_update<T>(params[i].value, params[i].grad, state.m[i], state.v[i], state.t, cfg);
}

/// Scalar-block form used where parameters are not wrapped in a Network.
template <typename T>
void adam_step(std::span<T> params, std::span<const T> grads, OptimizerState<T>& state, const TrainConfig& cfg) {
  if (state.m.empty()) {
    state.m.emplace_back(params.size(), T(0));
    state.v.emplace_back(params.size(), T(0));
  }
  if (state.m.size() != 1 || state.m[0].size() != params.size() || grads.size() != params.size())
    throw ShapeError("adam_step: shapes disagree");
  for (T g : grads)
    if (!std::isfinite(g)) throw RuntimeFailure("adam_step: non-finite gradient");
  ++state.t;
  adam_update<T>(params, grads, state.m[0], state.v[0], state.t, cfg);
}

// ---------------------------------------------------------------------------
// Early stopping

/// Tracks the best validation loss; an epoch counts as an improvement only
/// if it is strictly below the best seen so far.
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience) : patience_(patience) {
    if (patience < 1) throw DataError("patience must be >= 1");
  }

  /// Returns true if `val_loss` improved on the best.
  bool observe(int epoch, double val_loss) {
    if (val_loss < best_) {
      best_ = val_loss;
      best_epoch_ = epoch;
      stale_ = 0;
      return true;
    }
    ++stale_;
    return false;
  }

  bool should_stop() const { return stale_ >= patience_; }
  double best_loss() const { return best_; }
  int best_epoch() const { return best_epoch_; }
  int stale_epochs() const { return stale_; }

 private:
  int patience_;
  double best_ = std::numeric_limits<double>::infinity();
  int best_epoch_ = 0;
  int stale_ = 0;
};

struct EpochStats {
  int epoch = 0;
  double train_loss = 0.0;
  double train_acc = 0.0;  // percent
  double val_loss = 0.0;
  double val_acc = 0.0;  // percent
  double wall_seconds = 0.0;
};

struct LoopOutcome {
  int epochs_run = 0;
  int best_epoch = 0;
  double best_val_loss = std::numeric_limits<double>::infinity();
  bool stopped_early = false;
};

/// Epoch driver shared by `train` and the scripted tests: calls `run_epoch`
/// for epochs 1, 2, ... until `max_epochs` or early stopping, reporting each
/// epoch and whether it improved.
inline LoopOutcome run_training_loop(int max_epochs, int patience, const std::function<EpochStats(int)>& run_epoch,
                                     const std::function<void(const EpochStats&, bool)>& on_epoch = {}) {
  EarlyStopping stopper(patience);
  LoopOutcome out;
  for (int epoch = 1; epoch <= max_epochs; ++epoch) {
    EpochStats stats = run_epoch(epoch);
    stats.epoch = epoch;
    const bool improved = stopper.observe(epoch, stats.val_loss);
    out.epochs_run = epoch;
    if (on_epoch) on_epoch(stats, improved);
    if (stopper.should_stop()) {
      out.stopped_early = true;
      break;
    }
  }
  out.best_epoch = stopper.best_epoch();
  out.best_val_loss = stopper.best_loss();
  return out;
}

// ---------------------------------------------------------------------------
// Training log: one JSON object per line, appended as epochs finish.

struct TrainingLog {
  std::vector<EpochStats> epochs;
};

inline std::string to_log_line(const EpochStats& s) {
  ordered_json j;
  j["epoch"] = s.epoch;
  j["train_loss"] = s.train_loss;
  j["train_acc"] = s.train_acc;
  j["val_loss"] = s.val_loss;
  j["val_acc"] = s.val_acc;
  j["wall_seconds"] = s.wall_seconds;
  return j.dump();
}

inline TrainingLog load_training_log(const std::filesystem::path& path) {
  TrainingLog log;
  for (const auto& line : split_string(read_text_file(path), '\n')) {
    if (trim(line).empty()) continue;
    auto j = ordered_json::parse(line);
    log.epochs.push_back({j.at("epoch").get<int>(), j.at("train_loss").get<double>(), j.at("train_acc").get<double>(),
                          j.at("val_loss").get<double>(), j.at("val_acc").get<double>(),
                          j.at("wall_seconds").get<double>()});
  }
  return log;
}

// ---------------------------------------------------------------------------
// Frame datasets

/// Preprocessed frames of a set of videos, held in memory, with labels.
struct FrameDataset {
  std::vector<FrameTensor> frames;
  std::vector<Label> labels;
  std::vector<std::size_t> record_index;  // into `records`
  std::vector<VideoRecord> records;

  std::size_t size() const { return frames.size(); }
};

inline FrameDataset load_frames(const DatasetManifest& manifest, const std::vector<VideoRecord>& records, int height,
                                int width) {
  FrameDataset ds;
  ds.records = records;
  for (std::size_t ri = 0; ri < records.size(); ++ri) {
    const auto& r = records[ri];
    auto frames = extract_frames(r, manifest.resolve(r));
    for (std::size_t fi = 0; fi < frames.size(); ++fi) {
      auto t = preprocess_frame(frames[fi], height, width);
      t.video_id = r.video_id;
      t.frame_index = static_cast<int>(fi);
      ds.frames.push_back(std::move(t));
      ds.labels.push_back(r.label);
      ds.record_index.push_back(ri);
    }
  }
  return ds;
}

/// Inference-mode mean loss and accuracy (percent) over a dataset.
template <typename T>
std::pair<double, double> evaluate_loss(const Network<T>& net, const FrameDataset& ds, int batch_size = 32) {
  if (ds.size() == 0) throw DataError("evaluate_loss: empty dataset");
  double loss = 0;
  int correct = 0;
  for (std::size_t start = 0; start < ds.size(); start += static_cast<std::size_t>(batch_size)) {
    const std::size_t end = std::min(ds.size(), start + static_cast<std::size_t>(batch_size));
    auto batch = make_batch<T>(std::span(ds.frames).subspan(start, end - start));
    auto logits = net.forward(batch);
    auto r = compute_loss<T>(logits, std::span(ds.labels).subspan(start, end - start));
    loss += r.loss * static_cast<double>(end - start);
    correct += r.correct;
  }
  return {loss / static_cast<double>(ds.size()), 100.0 * correct / static_cast<double>(ds.size())};
}

struct TrainOptions {
  /// When set, best.ckpt, last.ckpt and training_log.jsonl are written here.
  std::optional<std::filesystem::path> out_dir;
  std::function<void(const EpochStats&, bool)> on_epoch;
};

struct TrainResult {
  Checkpoint best;
  Checkpoint last;
  TrainingLog log;
  LoopOutcome outcome;
};

/// Per epoch: seeded shuffle of training frames, mini-batches (final partial
/// batch kept), one Adam step each; then an inference-mode validation pass.
/// Keeps the checkpoint with the lowest validation loss and stops after
/// `patience` epochs without strict improvement or at `max_epochs`.
template <typename T>
TrainResult train(Network<T>& net, const FrameDataset& train_set, const FrameDataset& val_set, const TrainConfig& cfg,
                  const TrainOptions& options = {}) {
  cfg.validate();
  if (train_set.size() == 0) throw DataError("train: training split is empty");
  if (val_set.size() == 0) throw DataError("train: validation split is empty");
  const auto& mc = net.config();
  for (const auto* ds : {&train_set, &val_set})
    if (ds->frames.front().height != mc.input_height || ds->frames.front().width != mc.input_width)
      throw ShapeError("train: frames are " + std::to_string(ds->frames.front().height) + "x" +
                       std::to_string(ds->frames.front().width) + ", network expects " +
                       std::to_string(mc.input_height) + "x" + std::to_string(mc.input_width));

  OptimizerState<T> opt(net.parameters());
  TrainResult result;
  std::optional<std::ofstream> log_file;
  if (options.out_dir) {
    std::filesystem::create_directories(*options.out_dir);
    log_file.emplace(*options.out_dir / "training_log.jsonl", std::ios::binary | std::ios::trunc);
  }

  std::vector<std::size_t> order(train_set.size());
  std::vector<FrameTensor> batch_frames;
  std::vector<Label> batch_labels;
  ForwardCache<T> cache;

  auto run_epoch = [&](int epoch) {
    const auto start = std::chrono::steady_clock::now();
    std::iota(order.begin(), order.end(), 0);
    Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(epoch)));
    rng.shuffle(std::span(order));

    double loss_sum = 0;
    int correct = 0;
    for (std::size_t b = 0; b < order.size(); b += static_cast<std::size_t>(cfg.batch_size)) {
      const std::size_t e = std::min(order.size(), b + static_cast<std::size_t>(cfg.batch_size));
      batch_frames.clear();
      batch_labels.clear();
      for (std::size_t i = b; i < e; ++i) {
        batch_frames.push_back(train_set.frames[order[i]]);
        batch_labels.push_back(train_set.labels[order[i]]);
      }
      auto logits = net.forward(make_batch<T>(batch_frames), &cache);
      auto loss = compute_loss<T>(logits, batch_labels);
      if (!std::isfinite(loss.loss)) {
        if (options.out_dir) save_checkpoint(make_checkpoint(net, epoch, loss.loss), *options.out_dir / "diagnostic.ckpt");
        throw RuntimeFailure("non-finite training loss at epoch " + std::to_string(epoch) + ", batch " +
                             std::to_string(b / static_cast<std::size_t>(cfg.batch_size)));
      }
      net.zero_grad();
      net.backward(cache, loss.dlogits);
      adam_step(net.parameters(), opt, cfg);
      net.update_running_stats(cache);
      loss_sum += loss.loss * static_cast<double>(e - b);
      correct += loss.correct;
    }

    EpochStats s;
    s.epoch = epoch;
    s.train_loss = loss_sum / static_cast<double>(order.size());
    s.train_acc = 100.0 * correct / static_cast<double>(order.size());
    std::tie(s.val_loss, s.val_acc) = evaluate_loss(net, val_set);
    if (!std::isfinite(s.val_loss)) {
      if (options.out_dir) save_checkpoint(make_checkpoint(net, epoch, s.val_loss), *options.out_dir / "diagnostic.ckpt");
      throw RuntimeFailure("non-finite validation loss at epoch " + std::to_string(epoch));
    }
    s.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return s;
  };

  double best_so_far = std::numeric_limits<double>::infinity();
  auto on_epoch = [&](const EpochStats& s, bool improved) {
    result.log.epochs.push_back(s);
    if (improved) {
      best_so_far = s.val_loss;
      result.best = make_checkpoint(net, s.epoch, s.val_loss);
      if (options.out_dir) save_checkpoint(result.best, *options.out_dir / "best.ckpt");
    }
    result.last = make_checkpoint(net, s.epoch, best_so_far);
    if (options.out_dir) save_checkpoint(result.last, *options.out_dir / "last.ckpt");
    if (log_file) {
      *log_file << to_log_line(s) << "\n";
      log_file->flush();
    }
    if (options.on_epoch) options.on_epoch(s, improved);
  };

  result.outcome = run_training_loop(cfg.max_epochs, cfg.patience, run_epoch, on_epoch);
  return result;
}

}  // namespace deepstreets
