// Copyright 2026 The fedgs-sim Authors. All Rights Reserved.
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

#include <algorithm>
#include <cmath>
#include <sstream>
#include <vector>

#include "fedgs/optimizer.hpp"
#include "fedgs/segnet.hpp"
#include "test_util.hpp"

using namespace fedgs;

namespace {

Grid random_image(Stream& rng, std::size_t h, std::size_t w) {
  Grid g(h, w);
  for (auto& v : g.values) v = rng.normal();
  return g;
}

double loss_at(const ArchDescriptor& arch, const ParamVector& p, const Grid& img, const Mask& m) {
  return dice_loss(forward(arch, p, img), m);
}

// Central finite difference of the Dice loss along coordinate i.
double numeric_partial(const ArchDescriptor& arch, ParamVector p, const Grid& img, const Mask& m, std::size_t i,
                       double h) {
  const double x = p[i];
  p[i] = x + h;
  const double up = loss_at(arch, p, img, m);
  p[i] = x - h;
  const double down = loss_at(arch, p, img, m);
  return (up - down) / (2.0 * h);
}

}  // namespace

TEST(InitParams, DeterministicAndSized) {
  const ArchDescriptor arch;
  EXPECT_EQ(arch.param_count(), 77u);
  const ParamVector a = init_params(arch, 42);
  EXPECT_EQ(a.size(), 77u);
  EXPECT_EQ(a, init_params(arch, 42));
  EXPECT_NE(a, init_params(arch, 43));
  for (std::size_t c = 0; c < arch.hidden_channels; ++c) EXPECT_EQ(a[arch.conv1_bias_offset() + c], 0.0);
  EXPECT_EQ(a[arch.conv2_bias_offset()], 0.0);
  for (std::size_t i = 0; i < arch.conv1_kernel_size(); ++i) EXPECT_LE(std::abs(a[i]), 1.0 / 3.0);
}

TEST(InitParams, RejectsBadArch) {
  EXPECT_THROW(init_params(ArchDescriptor{1, 0}, 1), ValidationError);
  EXPECT_THROW(init_params(ArchDescriptor{2, 4}, 1), ValidationError);
}

TEST(Forward, ZeroParamsGiveOneHalf) {
  const ArchDescriptor arch;
  Stream rng(1);
  const Grid out = forward(arch, ParamVector(arch.param_count()), random_image(rng, 9, 11));
  EXPECT_EQ(out.height, 9u);
  EXPECT_EQ(out.width, 11u);
  for (const double v : out.values) EXPECT_EQ(v, 0.5);
}

TEST(Forward, HeadBiasShiftsAllLogits) {
  const ArchDescriptor arch;
  Stream rng(2);
  const Grid img = random_image(rng, 8, 8);
  ParamVector p = init_params(arch, 5);
  p[arch.conv2_bias_offset()] = 0.3;
  const auto base = forward_cached(arch, p, img);
  p[arch.conv2_bias_offset()] = 0.6;
  const auto shifted = forward_cached(arch, p, img);
  for (std::size_t i = 0; i < base.logits.size(); ++i) EXPECT_NEAR(shifted.logits[i] - base.logits[i], 0.3, 1e-12);
}

TEST(Forward, OutputsInOpenUnitIntervalAndDeterministic) {
  const ArchDescriptor arch;
  Stream rng(3);
  const Grid img = random_image(rng, 16, 16);
  const ParamVector p = init_params(arch, 9);
  const Grid a = forward(arch, p, img);
  EXPECT_EQ(a, forward(arch, p, img));
  for (const double v : a.values) {
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1.0);
  }
}

TEST(Forward, MatchesDirectConvolution) {
  // Independent per-pixel evaluation of conv -> relu -> conv -> sigmoid.
  const ArchDescriptor arch{1, 3};
  Stream rng(4);
  const Grid img = random_image(rng, 6, 7);
  const ParamVector p = init_params(arch, 17);
  const auto px = [&](long r, long c) {
    return (r < 0 || c < 0 || r >= 6 || c >= 7) ? 0.0 : img.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
  };
  const auto hidden = [&](std::size_t ch, long r, long c) {
    if (r < 0 || c < 0 || r >= 6 || c >= 7) return 0.0;
    double s = p[arch.conv1_bias_offset() + ch];
    for (long dy = -1; dy <= 1; ++dy)
      for (long dx = -1; dx <= 1; ++dx) s += p[ch * 9 + static_cast<std::size_t>((dy + 1) * 3 + dx + 1)] * px(r + dy, c + dx);
    return std::max(s, 0.0);
  };
  const Grid out = forward(arch, p, img);
  for (long r = 0; r < 6; ++r)
    for (long c = 0; c < 7; ++c) {
      double z = p[arch.conv2_bias_offset()];
      for (std::size_t ch = 0; ch < 3; ++ch)
        for (long dy = -1; dy <= 1; ++dy)
          for (long dx = -1; dx <= 1; ++dx)
            z += p[arch.conv2_kernel_offset() + ch * 9 + static_cast<std::size_t>((dy + 1) * 3 + dx + 1)] *
                 hidden(ch, r + dy, c + dx);
      EXPECT_NEAR(out.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c)), 1.0 / (1.0 + std::exp(-z)), 1e-14);
    }
}

TEST(Forward, RejectsTinyImagesAndWrongParamLength) {
  const ArchDescriptor arch;
  EXPECT_THROW(forward(arch, ParamVector(arch.param_count()), Grid(2, 5)), ShapeMismatch);
  EXPECT_THROW(forward(arch, ParamVector(3), Grid(5, 5)), LengthMismatch);
}

TEST(DiceLoss, Examples) {
  Mask m(2, 2);
  m.set(0, 0);
  m.set(1, 1);
  Grid exact(2, 2);
  exact.at(0, 0) = 1.0;
  exact.at(1, 1) = 1.0;
  EXPECT_EQ(dice_loss(exact, m), 0.0);
  EXPECT_EQ(dice_loss(Grid(2, 2), Mask(2, 2)), 0.0);
  EXPECT_NEAR(dice_loss(Grid(2, 2, 1.0), m), 2.0 / 7.0, 1e-15);
  EXPECT_THROW(dice_loss(Grid(2, 3), m), ShapeMismatch);
}

TEST(DiceLoss, PropertyRange) {
  Stream rng(8);
  for (int i = 0; i < 500; ++i) {
    const Mask m = fedgs::testing::random_mask(rng, 5, 6, rng.uniform());
    Grid p(5, 6);
    for (auto& v : p.values) v = rng.uniform();
    const double l = dice_loss(p, m);
    EXPECT_GE(l, 0.0);
    EXPECT_LT(l, 1.0);
  }
}

TEST(Backward, MatchesFiniteDifferences) {
  const ArchDescriptor arch;
  Stream rng(21);
  double worst = 0.0;
  for (int pair = 0; pair < 5; ++pair) {
    const Grid img = random_image(rng, 12, 12);
    const Mask m = fedgs::testing::random_disks(rng, 12, 12, 2, 1.5, 3.5);
    const ParamVector p = init_params(arch, 100 + pair);
    const auto fc = forward_cached(arch, p, img);
    double max_logit = 0.0;
    for (const double z : fc.logits) max_logit = std::max(max_logit, std::abs(z));
    ASSERT_LT(max_logit, 8.0);
    const ParamVector g = backward(arch, p, img, m);
    ASSERT_EQ(g.size(), p.size());
    for (int k = 0; k < 10; ++k) {
      const auto i = static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(p.size()) - 1));
      const double num = numeric_partial(arch, p, img, m, i, 1e-5);
      const double rel = std::abs(num - g[i]) / std::max({std::abs(num), std::abs(g[i]), 1e-8});
      worst = std::max(worst, rel);
    }
  }
  EXPECT_LT(worst, 1e-4);
}

TEST(Backward, EmptyMaskGradientIsFinite) {
  const ArchDescriptor arch;
  ParamVector p(arch.param_count());
  p[arch.conv2_bias_offset()] = -30.0;  // predictions driven to ~0
  Stream rng(2);
  const auto lg = loss_and_gradient(arch, p, random_image(rng, 8, 8), Mask(8, 8));
  EXPECT_TRUE(lg.gradient.all_finite());
  EXPECT_GE(lg.loss, 0.0);
}

TEST(Backward, SmallSgdStepDecreasesLoss) {
  const ArchDescriptor arch;
  Stream rng(31);
  const Grid img = random_image(rng, 16, 16);
  const Mask m = fedgs::testing::random_disks(rng, 16, 16, 2, 2.0, 4.0);
  const ParamVector p = init_params(arch, 3);
  const auto lg = loss_and_gradient(arch, p, img, m);
  bool decreased = false;
  for (const double lr : {1e-2, 1e-3, 1e-4}) {
    ParamVector q = p;
    auto st = OptimizerState::fresh({OptimizerKind::SGD, lr}, q.size());
    optimizer_step(st, q, lg.gradient);
    decreased = decreased || loss_at(arch, q, img, m) < lg.loss;
  }
  EXPECT_TRUE(decreased);
}

TEST(Optimizer, SgdExample) {
  ParamVector p(std::vector<double>{1.0});
  auto st = OptimizerState::fresh({OptimizerKind::SGD, 0.1}, 1);
  optimizer_step(st, p, ParamVector(std::vector<double>{0.5}));
  EXPECT_DOUBLE_EQ(p[0], 0.95);
  EXPECT_EQ(st.step, 1u);
  EXPECT_EQ(st.first_moment.size(), 0u);
}

TEST(Optimizer, AdamWZeroGradientFixedPoint) {
  OptimizerHyper h;
  h.weight_decay = 0.0;
  ParamVector p(std::vector<double>{0.3, -2.0});
  auto st = OptimizerState::fresh(h, 2);
  st.first_moment = ParamVector(std::vector<double>{0.5, -0.5});
  st.second_moment = ParamVector(std::vector<double>{0.25, 0.25});
  st.step = 3;
  optimizer_step(st, p, ParamVector(2));
  EXPECT_DOUBLE_EQ(st.first_moment[0], 0.45);
  EXPECT_DOUBLE_EQ(st.second_moment[0], 0.25 * 0.999);
  EXPECT_NE(p[0], 0.3);  // stored momentum still moves p

  ParamVector q(std::vector<double>{0.3, -2.0});
  auto fresh = OptimizerState::fresh(h, 2);
  optimizer_step(fresh, q, ParamVector(2));
  EXPECT_EQ(q, ParamVector(std::vector<double>({0.3, -2.0})));
  EXPECT_EQ(fresh.step, 1u);
}

TEST(Optimizer, AdamWFirstStepIsSignLike) {
  OptimizerHyper h;
  h.weight_decay = 0.0;
  h.learning_rate = 1e-3;
  const std::vector<double> g{0.5, -2e-3, 7.0, 0.0};
  ParamVector p(4);
  auto st = OptimizerState::fresh(h, 4);
  optimizer_step(st, p, ParamVector(g));
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(p[i], -h.learning_rate * g[i] / (std::abs(g[i]) + h.epsilon), 1e-15);
}

TEST(Optimizer, AdamWDecoupledWeightDecay) {
  OptimizerHyper h;
  h.learning_rate = 0.1;
  h.weight_decay = 0.5;
  ParamVector p(std::vector<double>{2.0});
  auto st = OptimizerState::fresh(h, 1);
  optimizer_step(st, p, ParamVector(1));
  EXPECT_DOUBLE_EQ(p[0], 2.0 - 0.1 * 0.5 * 2.0);
}

TEST(Checkpoint, RoundTripAndLayout) {
  const ParamVector p = init_params(ArchDescriptor{}, 77);
  std::stringstream ss;
  write_params(ss, p);
  const std::string bytes = ss.str();
  ASSERT_EQ(bytes.size(), 8 + 8 * p.size());
  EXPECT_EQ(static_cast<unsigned char>(bytes[0]), 77);  // little-endian length
  for (int i = 1; i < 8; ++i) EXPECT_EQ(bytes[i], 0);
  EXPECT_EQ(read_params(ss), p);

  std::stringstream one;
  write_params(one, ParamVector(std::vector<double>{1.0}));
  const std::string b = one.str();
  // 1.0 = 0x3FF0000000000000, least significant byte first.
  EXPECT_EQ(static_cast<unsigned char>(b[15]), 0x3F);
  EXPECT_EQ(static_cast<unsigned char>(b[14]), 0xF0);

  std::stringstream truncated(bytes.substr(0, 20));
  EXPECT_THROW(read_params(truncated), IoError);
}
