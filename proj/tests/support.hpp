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


// Shared test helpers and independent reference implementations.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "deepstreets/eval.hpp"
#include "deepstreets/model.hpp"
#include "deepstreets/synthgen.hpp"
#include "deepstreets/training.hpp"

namespace testing_support {

using namespace deepstreets;

/// Scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("deepstreets-" + tag + "-" + std::to_string(rd()) + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& s) const { return path_ / s; }

 private:
  std::filesystem::path path_;
};

// ---------------------------------------------------------------------------
// Adam, written out from the textbook recurrence one scalar at a time.

struct ScalarAdam {
  double lr, b1, b2, eps;
  double m = 0, v = 0;
  long t = 0;

  double step(double w, double g) {
    ++t;
    m = b1 * m + (1 - b1) * g;
    v = b2 * v + (1 - b2) * g * g;
    const double mhat = m / (1 - std::pow(b1, static_cast<double>(t)));
    const double vhat = v / (1 - std::pow(b2, static_cast<double>(t)));
    return w - lr * mhat / (std::sqrt(vhat) + eps);
  }
};

/// Largest absolute difference between the library optimizer and the
/// scalar recurrence over `steps` random gradient steps on `size` weights.
inline double adam_max_deviation(int steps, int size, std::uint64_t seed) {
  TrainConfig cfg;
  cfg.max_epochs = 1;
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> w(static_cast<std::size_t>(size));
  for (auto& x : w) x = normal(gen);
  std::vector<double> ref = w;
  std::vector<ScalarAdam> oracle(w.size(), ScalarAdam{cfg.learning_rate, cfg.beta1, cfg.beta2, cfg.epsilon});
  OptimizerState<double> state;
  double worst = 0;
  std::vector<double> g(w.size());
  for (int s = 0; s < steps; ++s) {
    for (auto& x : g) x = normal(gen) * std::pow(10.0, static_cast<double>(s % 5) - 2.0);
    adam_step<double>(std::span(w), std::span<const double>(g), state, cfg);
    for (std::size_t i = 0; i < w.size(); ++i) {
      ref[i] = oracle[i].step(ref[i], g[i]);
      worst = std::max(worst, std::abs(ref[i] - w[i]));
    }
  }
  return worst;
}

/// Weight change of a single Adam step from w = 0 with gradient 1.
inline double adam_first_step_delta() {
  TrainConfig cfg;
  cfg.max_epochs = 1;
  std::vector<double> w{0.0}, g{1.0};
  OptimizerState<double> state;
  adam_step<double>(std::span(w), std::span<const double>(g), state, cfg);
  return w[0];
}

// ---------------------------------------------------------------------------
// Dense convolution, direct summation, "same" zero padding, stride 1.
// weight is [out][in][k][k].

inline Tensor<double> dense_conv_same(const Tensor<double>& x, const std::vector<double>& weight, int out_channels,
                                      int k) {
  const int p = k / 2;
  Tensor<double> y(x.n, out_channels, x.h, x.w);
  for (int n = 0; n < x.n; ++n)
    for (int o = 0; o < out_channels; ++o)
      for (int yy = 0; yy < x.h; ++yy)
        for (int xx = 0; xx < x.w; ++xx) {
          double acc = 0;
          for (int i = 0; i < x.c; ++i)
            for (int ky = 0; ky < k; ++ky)
              for (int kx = 0; kx < k; ++kx) {
                const int iy = yy + ky - p, ix = xx + kx - p;
                if (iy < 0 || iy >= x.h || ix < 0 || ix >= x.w) continue;
                acc += weight[((static_cast<std::size_t>(o) * x.c + i) * k + ky) * k + kx] * x.at(n, i, iy, ix);
              }
          y.at(n, o, yy, xx) = acc;
        }
  return y;
}

/// Worst absolute error of separable_conv against the dense oracle over
/// `shapes` random small problems.
inline double separable_conv_max_error(int shapes, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::uniform_int_distribution<int> dim(1, 9), chans(1, 6), kern(0, 2), batch(1, 2);
  std::uniform_real_distribution<double> val(-1.0, 1.0);
  double worst = 0;
  for (int s = 0; s < shapes; ++s) {
    const int n = batch(gen), c = chans(gen), co = chans(gen), h = dim(gen), w = dim(gen), k = 2 * kern(gen) + 1;
    Tensor<double> x(n, c, h, w), dw(c, 1, k, k), pw(co, c, 1, 1);
    for (auto* t : {&x, &dw, &pw})
      for (auto& v : t->data) v = val(gen);
    std::vector<double> dense(static_cast<std::size_t>(co) * c * k * k);
    for (int o = 0; o < co; ++o)
      for (int i = 0; i < c; ++i)
        for (int ky = 0; ky < k; ++ky)
          for (int kx = 0; kx < k; ++kx)
            dense[((static_cast<std::size_t>(o) * c + i) * k + ky) * k + kx] =
                pw.at(o, i, 0, 0) * dw.at(i, 0, ky, kx);
    const auto expected = dense_conv_same(x, dense, co, k);
    const auto actual = separable_conv(x, dw, pw);
    if (!actual.same_shape(expected)) return std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < expected.size(); ++i)
      worst = std::max(worst, std::abs(expected.data[i] - actual.data[i]));
  }
  return worst;
}

// ---------------------------------------------------------------------------
// Parameter count of the reference architecture, walked shape by shape:
// convolutions carry no bias, every convolution is followed by a batch norm
// with a scale and an offset, and the head is a biased linear layer.

inline std::size_t reference_parameter_count(double width_multiplier, int middle_modules) {
  auto ch = [&](int base) { return static_cast<std::size_t>(std::max(1L, std::lround(base * width_multiplier))); };
  auto bn = [](std::size_t c) { return 2 * c; };
  auto conv = [&](std::size_t in, std::size_t out, std::size_t k) { return in * out * k * k + bn(out); };
  auto sep = [&](std::size_t in, std::size_t out) { return in * 9 + in * out + bn(out); };
  auto block = [&](std::size_t in, std::size_t mid, std::size_t out) {
    return sep(in, mid) + sep(mid, out) + conv(in, out, 1);
  };
  std::size_t total = conv(3, ch(32), 3) + conv(ch(32), ch(64), 3);
  total += block(ch(64), ch(128), ch(128));
  total += block(ch(128), ch(256), ch(256));
  total += block(ch(256), ch(728), ch(728));
  total += static_cast<std::size_t>(middle_modules) * 3 * sep(ch(728), ch(728));
  total += block(ch(728), ch(728), ch(1024));
  total += sep(ch(1024), ch(1536)) + sep(ch(1536), ch(2048));
  total += ch(2048) * 2 + 2;
  return total;
}

// ---------------------------------------------------------------------------
// Finite-difference gradient check in double precision.

struct GradientCheck {
  int directions = 0;
  int passed = 0;
  double worst_relative_error = 0;
};

inline ModelConfig tiny_model_config(std::uint64_t seed = 3) {
  ModelConfig c;
  c.input_height = 64;
  c.input_width = 128;
  c.width_multiplier = 1.0 / 8.0;
  c.middle_module_count = 1;
  c.seed = seed;
  return c;
}

inline GradientCheck gradient_check(int directions, double step, double tolerance, std::uint64_t seed) {
  Network<double> net(tiny_model_config(seed));
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  // Continuous inputs keep max-pool windows free of exact ties at the probe point.
  std::uniform_real_distribution<double> uniform(-1.0, 1.0);
  Tensor<double> x(4, 3, 64, 128);
  for (auto& v : x.data) v = uniform(gen);
  const std::vector<Label> labels{Label::Real, Label::Fake, Label::Fake, Label::Real};

  auto loss_at = [&]() {
    ForwardCache<double> cache;
    return compute_loss<double>(net.forward(x, &cache), labels).loss;
  };
  ForwardCache<double> cache;
  auto result = compute_loss<double>(net.forward(x, &cache), labels);
  net.zero_grad();
  net.backward(cache, result.dlogits);

  auto& params = net.parameters();
  GradientCheck out;
  out.directions = directions;
  for (int d = 0; d < directions; ++d) {
    std::vector<std::vector<double>> dir(params.size());
    double norm = 0;
    for (std::size_t i = 0; i < params.size(); ++i) {
      dir[i].resize(params[i].numel());
      for (auto& v : dir[i]) {
        v = normal(gen);
        norm += v * v;
      }
    }
    norm = std::sqrt(norm);
    double analytic = 0;
    for (std::size_t i = 0; i < params.size(); ++i)
      for (std::size_t j = 0; j < dir[i].size(); ++j) {
        dir[i][j] /= norm;
        analytic += dir[i][j] * params[i].grad[j];
      }
    auto shift = [&](double s) {
      for (std::size_t i = 0; i < params.size(); ++i)
        for (std::size_t j = 0; j < dir[i].size(); ++j) params[i].value[j] += s * dir[i][j];
    };
    shift(step);
    const double up = loss_at();
    shift(-2 * step);
    const double down = loss_at();
    shift(step);
    const double numeric = (up - down) / (2 * step);
    const double rel = std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), 1e-12});
    out.worst_relative_error = std::max(out.worst_relative_error, rel);
    out.passed += rel <= tolerance;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Scripted predictors.

/// Labels every frame with the same answer.
class ConstantPredictor final : public Predictor {
 public:
  ConstantPredictor(Label answer, int h = 32, int w = 64) : answer_(answer), h_(h), w_(w) {}
  std::pair<int, int> input_size() const override { return {h_, w_}; }
  std::vector<FramePrediction> predict(std::span<const FrameTensor> frames) const override {
    std::vector<FramePrediction> out;
    for (const auto& f : frames)
      out.push_back({f.video_id, f.frame_index, answer_ == Label::Fake ? 1.0 : 0.0, answer_});
    return out;
  }
  std::string id() const override { return std::string("constant-") + std::string(to_string(answer_)); }

 private:
  Label answer_;
  int h_, w_;
};

/// Knows the truth from the manifest and flips a chosen set of frames.
class OraclePredictor final : public Predictor {
 public:
  OraclePredictor(const DatasetManifest& m, std::set<std::pair<std::string, int>> flipped = {}, int h = 32, int w = 64)
      : flipped_(std::move(flipped)), h_(h), w_(w) {
    for (const auto& r : m.records) truth_[r.video_id] = r.label;
  }
  std::pair<int, int> input_size() const override { return {h_, w_}; }
  std::vector<FramePrediction> predict(std::span<const FrameTensor> frames) const override {
    std::vector<FramePrediction> out;
    for (const auto& f : frames) {
      Label l = truth_.at(f.video_id);
      if (flipped_.contains({f.video_id, f.frame_index})) l = l == Label::Fake ? Label::Real : Label::Fake;
      out.push_back({f.video_id, f.frame_index, l == Label::Fake ? 0.9 : 0.1, l});
    }
    return out;
  }
  std::string id() const override { return "oracle"; }

 private:
  std::map<std::string, Label> truth_;
  std::set<std::pair<std::string, int>> flipped_;
  int h_, w_;
};

/// A small fixture: `per_class` videos of each label, 64x32 unless given.
inline DatasetManifest small_fixture(const std::filesystem::path& dir, int per_class, int frames,
                                     std::uint64_t seed = 7, int width = 64, int height = 32) {
  FixtureConfig cfg;
  cfg.num_videos_per_class = per_class;
  cfg.frames_per_video = frames;
  cfg.width = width;
  cfg.height = height;
  cfg.seed = seed;
  return generate_fixture(cfg, dir);
}

// ---------------------------------------------------------------------------
// Published condition matrices used by the report tests.

inline ConditionMatrix published_compression_matrix() {
  ConditionMatrix m;
  m.row_labels = {"RAW", "HQ", "LQ"};
  m.col_labels = {"RAW", "HQ", "LQ"};
  m.cells = {{99.89, 99.90, 95.41}, {100.00, 100.00, 95.72}, {99.70, 99.63, 99.19}};
  return m;
}

inline ConditionMatrix published_cross_dataset_matrix() {
  ConditionMatrix m;
  m.row_labels = {"Cityvid", "Citywcvid", "Kittivid"};
  m.col_labels = {"Cityvid", "Citywcvid", "Kittivid"};
  m.cells = {{100.00, 71.50, 88.16}, {98.76, 99.76, 50.00}, {50.03, 50.00, 100.00}};
  return m;
}

/// Collapses runs of spaces so aligned tables compare by content.
inline std::string collapse_spaces(const std::string& s) {
  std::string out;
  for (char c : s)
    if (c != ' ' || out.empty() || out.back() != ' ') out += c;
  return out;
}

}  // namespace testing_support
