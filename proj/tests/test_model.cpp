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


#include <gtest/gtest.h>

#include "deepstreets/model.hpp"
#include "support.hpp"

using namespace deepstreets;
using testing_support::TempDir;

TEST(Architecture, DefaultDescriptor) {
  Network<float> net{ModelConfig{}};
  const auto& d = net.descriptor();
  EXPECT_EQ(d.feature_conv_layers(), 36);
  EXPECT_EQ(d.module_count(), 14);
  for (int i = 0; i < d.module_count(); ++i) {
    const bool edge = i == 0 || i == d.module_count() - 1;
    EXPECT_EQ(d.modules[static_cast<std::size_t>(i)].residual, !edge) << d.modules[static_cast<std::size_t>(i)].name;
  }
  int convs = 0;
  for (const auto& m : d.modules) convs += m.conv_layers;
  EXPECT_EQ(convs, 36);
  EXPECT_EQ(d.head_outputs, 2);
  EXPECT_EQ(d.feature_channels, 2048);
  EXPECT_EQ(d.feature_height, 8);
  EXPECT_EQ(d.feature_width, 16);
  EXPECT_EQ(d.projections.size(), 4u);
  EXPECT_EQ(d.feature_convs.front().kind, ConvKind::Standard);
  EXPECT_EQ(d.feature_convs.back().kind, ConvKind::Separable);
}

TEST(Architecture, ParameterCountMatchesShapeWalk) {
  Network<float> net{ModelConfig{}};
  EXPECT_EQ(net.descriptor().parameter_count, testing_support::reference_parameter_count(1.0, 8));
  EXPECT_EQ(net.descriptor().parameter_count, 20811050u);
  std::size_t sum = 0;
  for (const auto& p : net.parameters()) sum += p.numel();
  EXPECT_EQ(sum, net.descriptor().parameter_count);
}

TEST(Architecture, ReducedConfigurations) {
  for (auto [wm, middle] : {std::pair{1.0 / 8, 0}, std::pair{1.0 / 8, 1}, std::pair{0.25, 2}, std::pair{1.0 / 16, 3}}) {
    ModelConfig c;
    c.width_multiplier = wm;
    c.middle_module_count = middle;
    c.input_height = 64;
    c.input_width = 128;
    Network<float> net(c);
    EXPECT_EQ(net.descriptor().feature_conv_layers(), 12 + 3 * middle);
    EXPECT_EQ(net.descriptor().module_count(), 6 + middle);
    EXPECT_EQ(net.descriptor().parameter_count, testing_support::reference_parameter_count(wm, middle));
  }
  EXPECT_EQ(Network<float>(testing_support::tiny_model_config()).descriptor().parameter_count, 159447u);
}

TEST(Architecture, InvalidConfigurations) {
  ModelConfig c;
  c.input_height = 100;
  EXPECT_THROW(Network<float>{c}, DataError);
  c = {};
  c.width_multiplier = 0;
  EXPECT_THROW(Network<float>{c}, DataError);
  c = {};
  c.middle_module_count = -1;
  EXPECT_THROW(Network<float>{c}, DataError);
  c = {};
  c.num_classes = 3;
  EXPECT_THROW(Network<float>{c}, DataError);
}

TEST(Initialization, SeededAndDeterministic) {
  auto c = testing_support::tiny_model_config(11);
  Network<float> a(c), b(c);
  for (std::size_t i = 0; i < a.parameters().size(); ++i) EXPECT_EQ(a.parameters()[i].value, b.parameters()[i].value);
  c.seed = 12;
  Network<float> other(c);
  EXPECT_NE(a.parameters().front().value, other.parameters().front().value);
}

TEST(SeparableConv, MatchesDenseOracle) {
  EXPECT_LE(testing_support::separable_conv_max_error(25, 99), 1e-10);
}

TEST(SeparableConv, IdentityAndZeroKernels) {
  Tensor<double> x(1, 3, 5, 6);
  for (std::size_t i = 0; i < x.size(); ++i) x.data[i] = std::sin(static_cast<double>(i));
  Tensor<double> dw(3, 1, 3, 3), pw(3, 3, 1, 1);
  for (int c = 0; c < 3; ++c) {
    dw.at(c, 0, 1, 1) = 1;
    pw.at(c, c, 0, 0) = 1;
  }
  auto y = separable_conv(x, dw, pw);
  EXPECT_EQ(y.data, x.data);
  dw.zero();
  for (double v : separable_conv(x, dw, pw).data) EXPECT_EQ(v, 0.0);
  Tensor<double> bad(2, 1, 3, 3);
  EXPECT_THROW(separable_conv(x, bad, pw), ShapeError);
}

TEST(Forward, FullResolutionShapeAndBatchIndependence) {
  ModelConfig c;
  c.width_multiplier = 1.0 / 16;
  c.middle_module_count = 1;
  Network<float> net(c);
  Tensor<float> x(8, 3, 256, 512);
  for (int n = 0; n < 8; ++n)
    for (std::size_t i = 0; i < x.sample(); ++i)
      x.data[n * x.sample() + i] = static_cast<float>(std::sin(0.001 * static_cast<double>(i) * ((n % 4) + 1)));
  auto y = net.forward(x);
  EXPECT_EQ(y.n, 8);
  EXPECT_EQ(y.c, 2);
  EXPECT_EQ(y.h, 1);
  EXPECT_EQ(y.w, 1);
  for (float v : y.data) EXPECT_TRUE(std::isfinite(v));
  // Frames n and n+4 are identical: inference is per-sample.
  for (int n = 0; n < 4; ++n)
    for (int k = 0; k < 2; ++k) EXPECT_EQ(y.at(n, k, 0, 0), y.at(n + 4, k, 0, 0));
}

TEST(Forward, WrongInputShapeIsRejected) {
  Network<float> net(testing_support::tiny_model_config());
  EXPECT_THROW(net.forward(Tensor<float>(1, 1, 64, 128)), ShapeError);
  EXPECT_THROW(net.forward(Tensor<float>(1, 3, 32, 128)), ShapeError);
}

TEST(Gradients, MatchFiniteDifferences) {
  // A smaller step than the acceptance probe keeps central differences clear
  // of nearby ReLU and max-pool kinks, so every direction must agree.
  auto check = testing_support::gradient_check(20, 1e-6, 1e-4, 21);
  EXPECT_EQ(check.passed, 20) << "worst relative error " << check.worst_relative_error;
}

TEST(Predict, ProbabilityAndThreshold) {
  auto p = prediction_from_logits(0.0, 0.0);
  EXPECT_DOUBLE_EQ(p.score_fake, 0.5);
  EXPECT_EQ(p.predicted_label, Label::Fake);
  EXPECT_NEAR(prediction_from_logits(-10, 10).score_fake, 1.0, 1e-8);
  EXPECT_EQ(prediction_from_logits(10, -10).predicted_label, Label::Real);
  EXPECT_DOUBLE_EQ(fake_probability(1000, -1000), 0.0);
  EXPECT_DOUBLE_EQ(fake_probability(-1000, 1000), 1.0);
  EXPECT_EQ(prediction_from_logits(0.0, 0.5, 0.7).predicted_label, Label::Real);
}

TEST(Predict, SingleFrameMatchesBatch) {
  Network<float> net(testing_support::tiny_model_config());
  FrameTensor f;
  f.height = 64;
  f.width = 128;
  f.values.assign(64 * 128 * 3, 0.25f);
  f.video_id = "v";
  f.frame_index = 4;
  auto p = predict_frame(net, f);
  EXPECT_EQ(p.video_id, "v");
  EXPECT_EQ(p.frame_index, 4);
  auto logits = net.forward(make_batch<float>(std::span(&f, 1)));
  EXPECT_DOUBLE_EQ(p.score_fake, fake_probability(logits.data[0], logits.data[1]));
}

TEST(Checkpoint, RoundTripRestoresIdenticalOutputs) {
  TempDir dir("ckpt");
  Network<float> net(testing_support::tiny_model_config(5));
  net.buffers().front().value.assign(net.buffers().front().numel(), 0.5f);
  auto ck = make_checkpoint(net, 3, 0.25);
  save_checkpoint(ck, dir / "m.ckpt");
  auto back = load_checkpoint(dir / "m.ckpt");
  EXPECT_EQ(back, ck);
  auto restored = network_from_checkpoint<float>(back);
  Tensor<float> x(2, 3, 64, 128, 0.1f);
  EXPECT_EQ(restored.forward(x).data, net.forward(x).data);

  write_text_file(dir / "bad.ckpt", "DSCKPT");
  EXPECT_THROW(load_checkpoint(dir / "bad.ckpt"), DataError);
  auto bytes = checkpoint_to_bytes(ck);
  EXPECT_THROW(checkpoint_from_bytes(bytes.substr(0, bytes.size() - 1)), DataError);
  auto other_cfg = testing_support::tiny_model_config();
  other_cfg.middle_module_count = 2;
  Network<float> other(other_cfg);
  EXPECT_THROW(load_weights(other, ck), DataError);
}
