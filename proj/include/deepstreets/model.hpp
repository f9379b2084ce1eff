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

// Per-frame real/fake classifier with an Xception-style backbone.
//
// Layout at the default configuration (channel counts before scaling):
//
//   entry    module 1   conv 3x3/2 (32), conv 3x3 (64)                 no residual
//            module 2-4 2 separable convs (128, 256, 728) + max pool    1x1/2 projection
//   middle   module 5-12  3 separable convs (728)                       identity
//   exit     module 13  separable 728, 1024 + max pool                 1x1/2 projection
//            module 14  separable 1536, 2048                           no residual
//   head     global average pool, fully connected 2 outputs
//
// 36 convolutions in the feature extractor (projections excluded), 14
// modules. Every convolution is followed by batch normalization. Padding is
// "same" throughout, so the network downsamples by exactly 32.
//
// Class index 0 is real, 1 is fake.

#pragma once

#include <cmath>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include "deepstreets/common.hpp"
#include "deepstreets/layers.hpp"
#include "deepstreets/media.hpp"
#include "deepstreets/random.hpp"
#include "deepstreets/tensor.hpp"

namespace deepstreets {

inline constexpr int kNumClasses = 2;
inline constexpr int kDownsampling = 32;
inline constexpr double kDefaultThreshold = 0.5;

struct ModelConfig {
  int input_height = kNetworkInputHeight;
  int input_width = kNetworkInputWidth;
  double width_multiplier = 1.0;
  int middle_module_count = 8;
  int num_classes = kNumClasses;
  std::uint64_t seed = 0;

  int channels(int base) const {
    return std::max(1, static_cast<int>(std::lround(base * width_multiplier)));
  }

  void validate() const {
    if (input_height < kDownsampling || input_width < kDownsampling || input_height % kDownsampling ||
        input_width % kDownsampling)
      throw DataError("model input " + std::to_string(input_height) + "x" + std::to_string(input_width) +
                      " must be a positive multiple of 32 on both axes");
    if (!(width_multiplier > 0.0) || !std::isfinite(width_multiplier))
      throw DataError("width_multiplier must be positive");
    if (middle_module_count < 0) throw DataError("middle_module_count must be >= 0");
    if (num_classes != kNumClasses) throw DataError("num_classes is fixed at 2");
  }

  bool operator==(const ModelConfig&) const = default;
};

enum class ConvKind { Standard, Separable, Projection };

struct ConvLayerInfo {
  std::string name;
  ConvKind kind;
  int in_channels;
  int out_channels;
  int kernel;
  int stride;
};

struct ModuleInfo {
  std::string name;
  std::string flow;  // entry, middle, exit
  int conv_layers;
  bool residual;
  int out_channels;
};

struct ArchitectureDescriptor {
  std::vector<ModuleInfo> modules;
  std::vector<ConvLayerInfo> feature_convs;
  std::vector<ConvLayerInfo> projections;
  int feature_channels = 0;
  int feature_height = 0;
  int feature_width = 0;
  int head_outputs = kNumClasses;
  std::size_t parameter_count = 0;  // trainable
  std::size_t buffer_count = 0;     // batch-norm running statistics

  int feature_conv_layers() const { return static_cast<int>(feature_convs.size()); }
  int module_count() const { return static_cast<int>(modules.size()); }
};

template <typename T>
struct Parameter {
  std::string name;
  std::vector<int> shape;
  std::vector<T> value;
  std::vector<T> grad;  // empty for buffers

  std::size_t numel() const { return value.size(); }
};

template <typename T>
struct ForwardCache;

/// The classifier. Inference (`forward` without a cache) does not mutate the
/// network and may run concurrently; training calls are single-writer.
template <typename T>
class Network {
 public:
  explicit Network(const ModelConfig& config) : config_(config) {
    config_.validate();
    build();
    initialize();
  }

  const ModelConfig& config() const { return config_; }
  const ArchitectureDescriptor& descriptor() const { return descriptor_; }

  std::vector<Parameter<T>>& parameters() { return params_; }
  const std::vector<Parameter<T>>& parameters() const { return params_; }
  std::vector<Parameter<T>>& buffers() { return buffers_; }
  const std::vector<Parameter<T>>& buffers() const { return buffers_; }

  void zero_grad() {
    for (auto& p : params_) std::fill(p.grad.begin(), p.grad.end(), T(0));
  }

  /// Logits shaped (n, 2, 1, 1). With a cache, batch normalization uses
  /// batch statistics and activations are retained for `backward`;
  /// without, running statistics are used.
  Tensor<T> forward(const Tensor<T>& x, ForwardCache<T>* cache = nullptr) const;

  /// Accumulates parameter gradients given d(loss)/d(logits), shaped like
  /// the logits. Returns d(loss)/d(input).
  Tensor<T> backward(const ForwardCache<T>& cache, const Tensor<T>& dlogits);

  /// Folds the batch statistics of a training forward pass into the
  /// running statistics.
  void update_running_stats(const ForwardCache<T>& cache);

  bool all_finite() const {
    for (const auto& p : params_)
      for (T v : p.value)
        if (!std::isfinite(v)) return false;
    return true;
  }

  // Structure, public for the forward/backward helpers and tests.
  struct ConvBnUnit {
    int weight, gamma, beta, mean, var;
    layers::ConvGeometry geom;
  };
  struct SepBnUnit {
    int depthwise, pointwise, gamma, beta, mean, var;
    int in_channels, out_channels;
    bool relu_before, relu_after;
  };
  enum class Shortcut { None, Identity, Projection };
  struct Module {
    std::vector<ConvBnUnit> convs;  // stem only, each followed by ReLU
    std::vector<SepBnUnit> stages;
    bool pool = false;
    Shortcut shortcut = Shortcut::None;
    ConvBnUnit projection{};
  };

  const std::vector<Module>& modules() const { return modules_; }
  int head_weight_index() const { return head_weight_; }
  int head_bias_index() const { return head_bias_; }

 private:
  int add_param(const std::string& name, std::vector<int> shape) {
    std::size_t n = 1;
    for (int d : shape) n *= static_cast<std::size_t>(d);
    params_.push_back({name, std::move(shape), std::vector<T>(n, T(0)), std::vector<T>(n, T(0))});
    return static_cast<int>(params_.size() - 1);
  }
  int add_buffer(const std::string& name, int channels, T fill) {
    buffers_.push_back({name, {channels}, std::vector<T>(static_cast<std::size_t>(channels), fill), {}});
    return static_cast<int>(buffers_.size() - 1);
  }

  ConvBnUnit make_conv(const std::string& name, int in, int out, int k, int stride, int pad) {
    ConvBnUnit u;
    u.geom = {in, out, k, stride, pad};
    u.weight = add_param(name + ".weight", {out, in, k, k});
    u.gamma = add_param(name + ".bn.gamma", {out});
    u.beta = add_param(name + ".bn.beta", {out});
    u.mean = add_buffer(name + ".bn.running_mean", out, T(0));
    u.var = add_buffer(name + ".bn.running_var", out, T(1));
    return u;
  }

  SepBnUnit make_sep(const std::string& name, int in, int out, bool relu_before, bool relu_after) {
    SepBnUnit u;
    u.in_channels = in;
    u.out_channels = out;
    u.relu_before = relu_before;
    u.relu_after = relu_after;
    u.depthwise = add_param(name + ".depthwise", {in, 1, 3, 3});
    u.pointwise = add_param(name + ".pointwise", {out, in, 1, 1});
    u.gamma = add_param(name + ".bn.gamma", {out});
    u.beta = add_param(name + ".bn.beta", {out});
    u.mean = add_buffer(name + ".bn.running_mean", out, T(0));
    u.var = add_buffer(name + ".bn.running_var", out, T(1));
    return u;
  }

  void build() {
    auto& d = descriptor_;
    const auto& c = config_;
    auto sep_info = [&](const std::string& name, const SepBnUnit& u) {
      d.feature_convs.push_back({name, ConvKind::Separable, u.in_channels, u.out_channels, 3, 1});
    };

    // Module 1: two standard convolutions.
    {
      Module m;
      const int c1 = c.channels(32), c2 = c.channels(64);
      m.convs.push_back(make_conv("entry.conv1", 3, c1, 3, 2, 1));
      m.convs.push_back(make_conv("entry.conv2", c1, c2, 3, 1, 1));
      d.feature_convs.push_back({"entry.conv1", ConvKind::Standard, 3, c1, 3, 2});
      d.feature_convs.push_back({"entry.conv2", ConvKind::Standard, c1, c2, 3, 1});
      d.modules.push_back({"entry.module1", "entry", 2, false, c2});
      modules_.push_back(std::move(m));
    }

    auto downsampling_block = [&](const std::string& name, const std::string& flow, int in, int mid, int out,
                                  bool first_relu) {
      Module m;
      m.stages.push_back(make_sep(name + ".sep1", in, mid, first_relu, false));
      m.stages.push_back(make_sep(name + ".sep2", mid, out, true, false));
      m.pool = true;
      m.shortcut = Shortcut::Projection;
      m.projection = make_conv(name + ".shortcut", in, out, 1, 2, 0);
      sep_info(name + ".sep1", m.stages[0]);
      sep_info(name + ".sep2", m.stages[1]);
      d.projections.push_back({name + ".shortcut", ConvKind::Projection, in, out, 1, 2});
      d.modules.push_back({name, flow, 2, true, out});
      modules_.push_back(std::move(m));
      return out;
    };

    int ch = c.channels(64);
    ch = downsampling_block("entry.module2", "entry", ch, c.channels(128), c.channels(128), false);
    ch = downsampling_block("entry.module3", "entry", ch, c.channels(256), c.channels(256), true);
    ch = downsampling_block("entry.module4", "entry", ch, c.channels(728), c.channels(728), true);

    for (int i = 0; i < c.middle_module_count; ++i) {
      const std::string name = "middle.module" + std::to_string(5 + i);
      Module m;
      for (int s = 0; s < 3; ++s) {
        m.stages.push_back(make_sep(name + ".sep" + std::to_string(s + 1), ch, ch, true, false));
        sep_info(name + ".sep" + std::to_string(s + 1), m.stages.back());
      }
      m.shortcut = Shortcut::Identity;
      d.modules.push_back({name, "middle", 3, true, ch});
      modules_.push_back(std::move(m));
    }

    const int exit_index = 5 + c.middle_module_count;
    ch = downsampling_block("exit.module" + std::to_string(exit_index), "exit", ch, c.channels(728),
                            c.channels(1024), true);
    {
      const std::string name = "exit.module" + std::to_string(exit_index + 1);
      Module m;
      m.stages.push_back(make_sep(name + ".sep1", ch, c.channels(1536), false, true));
      m.stages.push_back(make_sep(name + ".sep2", c.channels(1536), c.channels(2048), false, true));
      sep_info(name + ".sep1", m.stages[0]);
      sep_info(name + ".sep2", m.stages[1]);
      ch = c.channels(2048);
      d.modules.push_back({name, "exit", 2, false, ch});
      modules_.push_back(std::move(m));
    }

    head_weight_ = add_param("head.weight", {kNumClasses, ch});
    head_bias_ = add_param("head.bias", {kNumClasses});
    d.feature_channels = ch;
    d.feature_height = c.input_height / kDownsampling;
    d.feature_width = c.input_width / kDownsampling;
    d.head_outputs = kNumClasses;
    for (const auto& p : params_) d.parameter_count += p.numel();
    for (const auto& b : buffers_) d.buffer_count += b.numel();
  }

  // Fan-in scaled uniform: U(-sqrt(6 / fan_in), +sqrt(6 / fan_in)) for
  // convolutions, U(-1 / sqrt(fan_in), +1 / sqrt(fan_in)) for the head
  // weight. Batch-norm scale 1, offsets and head bias 0. Parameters are
  // drawn in registration order from a single seeded stream.
  void initialize() {
    Rng rng(mix_seed(config_.seed, 0x5eed));
    for (std::size_t i = 0; i < params_.size(); ++i) {
      auto& p = params_[i];
      const auto& name = p.name;
      auto ends_with = [&](std::string_view suffix) {
        return name.size() >= suffix.size() && name.compare(name.size() - suffix.size(), suffix.size(), suffix) == 0;
      };
      if (ends_with(".gamma")) {
        std::fill(p.value.begin(), p.value.end(), T(1));
      } else if (ends_with(".beta") || ends_with(".bias")) {
        std::fill(p.value.begin(), p.value.end(), T(0));
      } else {
        std::size_t fan_in = 1;
        for (std::size_t k = 1; k < p.shape.size(); ++k) fan_in *= static_cast<std::size_t>(p.shape[k]);
        const double bound = static_cast<int>(i) == head_weight_ ? 1.0 / std::sqrt(static_cast<double>(fan_in))
                                                                 : std::sqrt(6.0 / static_cast<double>(fan_in));
        for (auto& v : p.value) v = static_cast<T>(rng.uniform(-bound, bound));
      }
    }
  }

  ModelConfig config_;
  ArchitectureDescriptor descriptor_;
  std::vector<Parameter<T>> params_;
  std::vector<Parameter<T>> buffers_;
  std::vector<Module> modules_;
  int head_weight_ = -1;
  int head_bias_ = -1;
};

template <typename T>
struct ConvBnCache {
  Tensor<T> input;
  layers::BatchNormCache<T> bn;
};

template <typename T>
struct SepBnCache {
  Tensor<T> input;      // before the optional leading ReLU
  Tensor<T> activated;  // depthwise input
  Tensor<T> depthwise;  // pointwise input
  layers::BatchNormCache<T> bn;
  Tensor<T> output;  // after the optional trailing ReLU
};

template <typename T>
struct ModuleCache {
  std::vector<ConvBnCache<T>> convs;
  std::vector<Tensor<T>> conv_outputs;  // post-ReLU, stem only
  std::vector<SepBnCache<T>> stages;
  Tensor<T> pre_pool;
  std::vector<std::int32_t> argmax;
  ConvBnCache<T> projection;
};

template <typename T>
struct ForwardCache {
  std::vector<ModuleCache<T>> modules;
  Tensor<T> features;
  Tensor<T> pooled;
};

namespace detail {

template <typename T>
std::span<const T> view(const std::vector<Parameter<T>>& ps, int i) {
  return ps[static_cast<std::size_t>(i)].value;
}
template <typename T>
std::span<T> grad(std::vector<Parameter<T>>& ps, int i) {
  return ps[static_cast<std::size_t>(i)].grad;
}

template <typename T, typename Unit>
Tensor<T> conv_bn_forward(const Network<T>& net, const Unit& u, const Tensor<T>& x, ConvBnCache<T>* cache) {
  const auto& P = net.parameters();
  const auto& B = net.buffers();
  auto conv = layers::conv2d_forward<T>(x, view(P, u.weight), u.geom);
  if (cache) cache->input = x;
  return layers::batchnorm_forward<T>(conv, view(P, u.gamma), view(P, u.beta), view(B, u.mean), view(B, u.var),
                                      cache ? &cache->bn : nullptr);
}

template <typename T, typename Unit>
Tensor<T> conv_bn_backward(Network<T>& net, const Unit& u, const ConvBnCache<T>& cache, const Tensor<T>& dy) {
  auto& P = net.parameters();
  auto dconv = layers::batchnorm_backward<T>(cache.bn, view(P, u.gamma), dy, grad(P, u.gamma), grad(P, u.beta));
  return layers::conv2d_backward<T>(cache.input, view(P, u.weight), u.geom, dconv, grad(P, u.weight));
}

template <typename T, typename Unit>
Tensor<T> sep_forward(const Network<T>& net, const Unit& u, const Tensor<T>& x, SepBnCache<T>* cache) {
  const auto& P = net.parameters();
  const auto& B = net.buffers();
  Tensor<T> a = u.relu_before ? layers::relu_forward(x) : x;
  auto d = layers::depthwise_forward<T>(a, view(P, u.depthwise), 3);
  auto p = layers::pointwise_forward<T>(d, view(P, u.pointwise), u.out_channels);
  auto b = layers::batchnorm_forward<T>(p, view(P, u.gamma), view(P, u.beta), view(B, u.mean), view(B, u.var),
                                        cache ? &cache->bn : nullptr);
  if (u.relu_after) b = layers::relu_forward(b);
  if (cache) {
    if (u.relu_before) cache->input = x;
    cache->activated = std::move(a);
    cache->depthwise = std::move(d);
    if (u.relu_after) cache->output = b;
  }
  return b;
}

template <typename T, typename Unit>
Tensor<T> sep_backward(Network<T>& net, const Unit& u, const SepBnCache<T>& cache, Tensor<T> dy) {
  auto& P = net.parameters();
  if (u.relu_after) dy = layers::relu_backward(cache.output, dy);
  auto dp = layers::batchnorm_backward<T>(cache.bn, view(P, u.gamma), dy, grad(P, u.gamma), grad(P, u.beta));
  auto dd = layers::pointwise_backward<T>(cache.depthwise, view(P, u.pointwise), dp, grad(P, u.pointwise));
  auto da = layers::depthwise_backward<T>(cache.activated, view(P, u.depthwise), 3, dd, grad(P, u.depthwise));
  return u.relu_before ? layers::relu_backward(cache.input, da) : da;
}

}  // namespace detail

template <typename T>
Tensor<T> Network<T>::forward(const Tensor<T>& x, ForwardCache<T>* cache) const {
  if (x.c != 3 || x.h != config_.input_height || x.w != config_.input_width || x.n < 1)
    throw ShapeError("forward: batch " + x.shape_string() + " does not match model input (N, 3, " +
                     std::to_string(config_.input_height) + ", " + std::to_string(config_.input_width) + ")");
  if (cache) cache->modules.assign(modules_.size(), {});
  Tensor<T> h = x;
  for (std::size_t mi = 0; mi < modules_.size(); ++mi) {
    const auto& m = modules_[mi];
    ModuleCache<T>* mc = cache ? &cache->modules[mi] : nullptr;
    if (!m.convs.empty()) {
      if (mc) {
        mc->convs.resize(m.convs.size());
        mc->conv_outputs.resize(m.convs.size());
      }
      for (std::size_t k = 0; k < m.convs.size(); ++k) {
        h = layers::relu_forward(detail::conv_bn_forward(*this, m.convs[k], h, mc ? &mc->convs[k] : nullptr));
        if (mc) mc->conv_outputs[k] = h;
      }
      continue;
    }
    Tensor<T> input = h;
    if (mc) mc->stages.resize(m.stages.size());
    for (std::size_t s = 0; s < m.stages.size(); ++s)
      h = detail::sep_forward(*this, m.stages[s], h, mc ? &mc->stages[s] : nullptr);
    if (m.pool) {
      if (mc) mc->pre_pool = h;
      h = layers::maxpool_forward(h, mc ? &mc->argmax : nullptr);
    }
    if (m.shortcut == Shortcut::Identity) {
      add_inplace(h, input);
    } else if (m.shortcut == Shortcut::Projection) {
      add_inplace(h, detail::conv_bn_forward(*this, m.projection, input, mc ? &mc->projection : nullptr));
    }
  }
  auto pooled = layers::gap_forward(h);
  auto logits = layers::linear_forward<T>(pooled, detail::view(params_, head_weight_),
                                          detail::view(params_, head_bias_), kNumClasses);
  if (cache) {
    cache->features = std::move(h);
    cache->pooled = std::move(pooled);
  }
  return logits;
}

template <typename T>
Tensor<T> Network<T>::backward(const ForwardCache<T>& cache, const Tensor<T>& dlogits) {
  if (cache.modules.size() != modules_.size()) throw ShapeError("backward: cache does not belong to this network");
  auto dpooled = layers::linear_backward<T>(cache.pooled, detail::view(params_, head_weight_), dlogits,
                                            detail::grad(params_, head_weight_), detail::grad(params_, head_bias_));
  Tensor<T> dh = layers::gap_backward(cache.features, dpooled);
  for (std::size_t mi = modules_.size(); mi-- > 0;) {
    const auto& m = modules_[mi];
    const auto& mc = cache.modules[mi];
    if (!m.convs.empty()) {
      for (std::size_t k = m.convs.size(); k-- > 0;) {
        dh = layers::relu_backward(mc.conv_outputs[k], dh);
        dh = detail::conv_bn_backward(*this, m.convs[k], mc.convs[k], dh);
      }
      continue;
    }
    Tensor<T> dshort;
    if (m.shortcut == Shortcut::Identity) dshort = dh;
    else if (m.shortcut == Shortcut::Projection) dshort = detail::conv_bn_backward(*this, m.projection, mc.projection, dh);
    if (m.pool) dh = layers::maxpool_backward(mc.pre_pool, mc.argmax, dh);
    for (std::size_t s = m.stages.size(); s-- > 0;) dh = detail::sep_backward(*this, m.stages[s], mc.stages[s], dh);
    if (m.shortcut != Shortcut::None) add_inplace(dh, dshort);
  }
  return dh;
}

template <typename T>
void Network<T>::update_running_stats(const ForwardCache<T>& cache) {
  auto apply = [&](const layers::BatchNormCache<T>& bn, int mean, int var) {
    const auto count = static_cast<std::size_t>(bn.xhat.n) * bn.xhat.plane();
    layers::update_running_stats<T>(bn, count, buffers_[static_cast<std::size_t>(mean)].value,
                                    buffers_[static_cast<std::size_t>(var)].value);
  };
  for (std::size_t mi = 0; mi < modules_.size(); ++mi) {
    const auto& m = modules_[mi];
    const auto& mc = cache.modules[mi];
    for (std::size_t k = 0; k < m.convs.size(); ++k) apply(mc.convs[k].bn, m.convs[k].mean, m.convs[k].var);
    for (std::size_t s = 0; s < m.stages.size(); ++s) apply(mc.stages[s].bn, m.stages[s].mean, m.stages[s].var);
    if (m.shortcut == Shortcut::Projection) apply(mc.projection.bn, m.projection.mean, m.projection.var);
  }
}

// ---------------------------------------------------------------------------
// Batching and prediction

/// Packs interleaved HWC frames into an NCHW batch.
template <typename T>
Tensor<T> make_batch(std::span<const FrameTensor> frames) {
  if (frames.empty()) throw ShapeError("make_batch: empty batch");
  const int h = frames.front().height, w = frames.front().width;
  Tensor<T> batch(static_cast<int>(frames.size()), 3, h, w);
  for (std::size_t n = 0; n < frames.size(); ++n) {
    const auto& f = frames[n];
    if (f.height != h || f.width != w || f.channels != 3 || f.values.size() != static_cast<std::size_t>(h) * w * 3)
      throw ShapeError("make_batch: frame " + std::to_string(n) + " has a different shape");
    for (int c = 0; c < 3; ++c) {
      T* dst = batch.ptr(static_cast<int>(n), c);
      for (std::size_t i = 0; i < static_cast<std::size_t>(h) * w; ++i) dst[i] = static_cast<T>(f.values[i * 3 + c]);
    }
  }
  return batch;
}

/// softmax(logits)[fake], computed stably.
inline double fake_probability(double logit_real, double logit_fake) {
  const double m = std::max(logit_real, logit_fake);
  const double er = std::exp(logit_real - m), ef = std::exp(logit_fake - m);
  return ef / (er + ef);
}

struct FramePrediction {
  std::string video_id;
  int frame_index = 0;
  double score_fake = 0.0;
  Label predicted_label = Label::Real;
};

/// Scores at or above the threshold are labeled fake, so exact ties flag.
inline Label label_for_score(double score_fake, double threshold = kDefaultThreshold) {
  return score_fake >= threshold ? Label::Fake : Label::Real;
}

inline FramePrediction prediction_from_logits(double logit_real, double logit_fake, double threshold = kDefaultThreshold) {
  FramePrediction p;
  p.score_fake = fake_probability(logit_real, logit_fake);
  p.predicted_label = label_for_score(p.score_fake, threshold);
  return p;
}

template <typename T>
FramePrediction predict_frame(const Network<T>& net, const FrameTensor& frame, double threshold = kDefaultThreshold) {
  auto logits = net.forward(make_batch<T>(std::span(&frame, 1)));
  auto p = prediction_from_logits(logits.at(0, 0, 0, 0), logits.at(0, 1, 0, 0), threshold);
  p.video_id = frame.video_id;
  p.frame_index = frame.frame_index;
  return p;
}

template <typename T>
Network<T> build_network(const ModelConfig& config) {
  return Network<T>(config);
}

// ---------------------------------------------------------------------------
// Checkpoints
//
// Little-endian binary:
//   magic "DSCKPT\0\0" | u32 schema_version
//   u32 input_height | u32 input_width | f64 width_multiplier
//   u32 middle_module_count | u32 num_classes | u64 seed
//   u32 epoch | f64 best_val_loss | u32 blob_count
//   per blob: u32 name_len | name | u32 ndims | u32 dims[ndims] | f32 data[]
// Blobs are trainable parameters followed by batch-norm running statistics.

struct CheckpointBlob {
  std::string name;
  std::vector<int> shape;
  std::vector<float> data;

  bool operator==(const CheckpointBlob&) const = default;
};

struct Checkpoint {
  int schema_version = kSchemaVersion;
  ModelConfig config;
  int epoch = 0;
  double best_val_loss = std::numeric_limits<double>::infinity();
  std::vector<CheckpointBlob> blobs;

  bool operator==(const Checkpoint&) const = default;
};

namespace detail {

class ByteWriter {
 public:
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
  }
  void f32(float f) {
    std::uint32_t v;
    std::memcpy(&v, &f, 4);
    u32(v);
  }
  void f64(double d) {
    std::uint64_t v;
    std::memcpy(&v, &d, 8);
    u64(v);
  }
  void raw(std::string_view s) { bytes_.append(s); }
  const std::string& bytes() const { return bytes_; }

 private:
  std::string bytes_;
};

class ByteReader {
 public:
  explicit ByteReader(std::string_view bytes) : bytes_(bytes) {}
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_++])) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_++])) << (8 * i);
    return v;
  }
  float f32() {
    auto v = u32();
    float f;
    std::memcpy(&f, &v, 4);
    return f;
  }
  double f64() {
    auto v = u64();
    double d;
    std::memcpy(&d, &v, 8);
    return d;
  }
  std::string raw(std::size_t n) {
    need(n);
    std::string s(bytes_.substr(pos_, n));
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw DataError("checkpoint truncated");
  }
  std::string_view bytes_;
  std::size_t pos_ = 0;
};

inline constexpr std::string_view kCheckpointMagic{"DSCKPT\0\0", 8};

}  // namespace detail

inline std::string checkpoint_to_bytes(const Checkpoint& ck) {
  detail::ByteWriter w;
  w.raw(detail::kCheckpointMagic);
  w.u32(static_cast<std::uint32_t>(ck.schema_version));
  w.u32(static_cast<std::uint32_t>(ck.config.input_height));
  w.u32(static_cast<std::uint32_t>(ck.config.input_width));
  w.f64(ck.config.width_multiplier);
  w.u32(static_cast<std::uint32_t>(ck.config.middle_module_count));
  w.u32(static_cast<std::uint32_t>(ck.config.num_classes));
  w.u64(ck.config.seed);
  w.u32(static_cast<std::uint32_t>(ck.epoch));
  w.f64(ck.best_val_loss);
  w.u32(static_cast<std::uint32_t>(ck.blobs.size()));
  for (const auto& b : ck.blobs) {
    w.u32(static_cast<std::uint32_t>(b.name.size()));
    w.raw(b.name);
    w.u32(static_cast<std::uint32_t>(b.shape.size()));
    for (int d : b.shape) w.u32(static_cast<std::uint32_t>(d));
    for (float f : b.data) w.f32(f);
  }
  return w.bytes();
}

inline Checkpoint checkpoint_from_bytes(std::string_view bytes) {
  detail::ByteReader r(bytes);
  if (r.raw(8) != detail::kCheckpointMagic) throw DataError("not a checkpoint file");
  Checkpoint ck;
  ck.schema_version = static_cast<int>(r.u32());
  if (ck.schema_version != kSchemaVersion)
    throw DataError("unsupported checkpoint schema_version " + std::to_string(ck.schema_version));
  ck.config.input_height = static_cast<int>(r.u32());
  ck.config.input_width = static_cast<int>(r.u32());
  ck.config.width_multiplier = r.f64();
  ck.config.middle_module_count = static_cast<int>(r.u32());
  ck.config.num_classes = static_cast<int>(r.u32());
  ck.config.seed = r.u64();
  ck.epoch = static_cast<int>(r.u32());
  ck.best_val_loss = r.f64();
  const auto count = r.u32();
  for (std::uint32_t i = 0; i < count; ++i) {
    CheckpointBlob b;
    b.name = r.raw(r.u32());
    const auto nd = r.u32();
    std::size_t n = 1;
    for (std::uint32_t k = 0; k < nd; ++k) {
      b.shape.push_back(static_cast<int>(r.u32()));
      n *= static_cast<std::size_t>(b.shape.back());
    }
    b.data.resize(n);
    for (auto& f : b.data) f = r.f32();
    ck.blobs.push_back(std::move(b));
  }
  if (!r.done()) throw DataError("trailing bytes after checkpoint");
  return ck;
}

inline void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  write_text_file(path, checkpoint_to_bytes(ck));
}

inline Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return checkpoint_from_bytes(read_text_file(path));
}

template <typename T>
Checkpoint make_checkpoint(const Network<T>& net, int epoch, double best_val_loss) {
  Checkpoint ck;
  ck.config = net.config();
  ck.epoch = epoch;
  ck.best_val_loss = best_val_loss;
  auto add = [&](const Parameter<T>& p) {
    CheckpointBlob b{p.name, p.shape, std::vector<float>(p.value.size())};
    for (std::size_t i = 0; i < p.value.size(); ++i) b.data[i] = static_cast<float>(p.value[i]);
    ck.blobs.push_back(std::move(b));
  };
  for (const auto& p : net.parameters()) add(p);
  for (const auto& p : net.buffers()) add(p);
  return ck;
}

/// Copies checkpoint blobs into `net`, matching by name and shape.
template <typename T>
void load_weights(Network<T>& net, const Checkpoint& ck) {
  std::size_t k = 0;
  auto take = [&](Parameter<T>& p) {
    if (k >= ck.blobs.size()) throw DataError("checkpoint has too few blobs");
    const auto& b = ck.blobs[k++];
    if (b.name != p.name || b.shape != p.shape)
      throw ShapeError("checkpoint blob '" + b.name + "' does not match parameter '" + p.name + "'");
    for (std::size_t i = 0; i < b.data.size(); ++i) p.value[i] = static_cast<T>(b.data[i]);
  };
  for (auto& p : net.parameters()) take(p);
  for (auto& p : net.buffers()) take(p);
  if (k != ck.blobs.size()) throw DataError("checkpoint has extra blobs");
}

template <typename T>
Network<T> network_from_checkpoint(const Checkpoint& ck) {
  Network<T> net(ck.config);
  load_weights(net, ck);
  return net;
}

}  // namespace deepstreets
