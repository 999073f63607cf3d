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

#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include "fedgs/difficulty.hpp"
#include "fedgs/mask.hpp"
#include "fedgs/morphology.hpp"
#include "test_util.hpp"

using namespace fedgs;
using fedgs::testing::disk_mask;

// Reference values computed with mpmath at 30 significant digits:
//   tanh((ln a / ln 100)^2) for a in {150, 1e3, 1e4, 1e6}, and tanh(1).
constexpr double kDelta150 = 0.828659644883873289876342485873;
constexpr double kDelta1e3 = 0.978026114738813639922729243006;
constexpr double kDelta1e4 = 0.999329299739067043792243344342;
constexpr double kDelta1e6 = 0.999999969540040974479302111184;
constexpr double kTanh1 = 0.761594155955764888119458282605;

TEST(InverseRelativeArea, Examples) {
  Mask m(512, 512);
  for (std::size_t i = 0; i < 1000; ++i) m.set_flat(i, true);
  EXPECT_DOUBLE_EQ(*inverse_relative_area(m), 262.144);

  Mask full(32, 32);
  for (std::size_t i = 0; i < full.size(); ++i) full.set_flat(i, true);
  EXPECT_EQ(*inverse_relative_area(full), 1.0);

  EXPECT_FALSE(inverse_relative_area(Mask(32, 32)).has_value());
}

TEST(Mask, RejectsZeroDimension) { EXPECT_THROW(Mask(0, 4), ShapeMismatch); }

TEST(Erode, IsolatedPixelVanishes) {
  Mask m(7, 7);
  m.set(3, 3);
  EXPECT_TRUE(erode(m, StructuringElement::Square3, 1).empty());
  EXPECT_TRUE(erode(m, StructuringElement::Cross3, 1).empty());
}

TEST(Erode, ThreeWideStripBecomesOneWide) {
  Mask m(9, 20);
  for (std::size_t r = 3; r < 6; ++r)
    for (std::size_t c = 0; c < 20; ++c) m.set(r, c);
  const Mask e = erode(m, StructuringElement::Square3, 1);
  // Row 4 survives except the two columns touching the frame.
  for (std::size_t r = 0; r < 9; ++r)
    for (std::size_t c = 0; c < 20; ++c) EXPECT_EQ(e.get(r, c), r == 4 && c > 0 && c < 19) << r << "," << c;
}

TEST(Erode, ZeroIterationsIsIdentity) {
  Stream rng(7);
  const Mask m = fedgs::testing::random_mask(rng, 12, 17, 0.6);
  EXPECT_EQ(erode(m, StructuringElement::Square3, 0), m);
  EXPECT_EQ(erode(m, StructuringElement::Cross3, 0), m);
}

TEST(Erode, PropertyAntiExtensiveAndComposes) {
  Stream rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const Mask m = fedgs::testing::random_mask(rng, 4 + trial % 13, 5 + trial % 7, rng.uniform(0.3, 0.95));
    for (const auto el : {StructuringElement::Square3, StructuringElement::Cross3}) {
      const Mask once = erode(m, el, 1);
      EXPECT_TRUE(once.subset_of(m));
      EXPECT_EQ(erode(once, el, 1), erode(m, el, 2));
      EXPECT_TRUE(m.subset_of(dilate(m, el, 1)));
    }
  }
}

TEST(LabelComponents, DisjointBlobs) {
  Mask m(10, 10);
  for (std::size_t c = 0; c < 5; ++c) m.set(1, c);
  for (std::size_t r = 4; r < 9; ++r) m.set(r, 7);
  const auto lab = label_components(m, Connectivity::Eight);
  ASSERT_EQ(lab.count(), 2u);
  EXPECT_EQ(lab.areas[0], 5u);
  EXPECT_EQ(lab.areas[1], 5u);
  EXPECT_EQ(label_components(Mask(5, 5), Connectivity::Four).count(), 0u);
}

TEST(LabelComponents, DiagonalTouch) {
  Mask m(6, 6);
  m.set(1, 1);
  m.set(1, 2);
  m.set(2, 3);
  m.set(3, 3);
  EXPECT_EQ(label_components(m, Connectivity::Eight).count(), 1u);
  EXPECT_EQ(label_components(m, Connectivity::Four).count(), 2u);
}

TEST(LabelComponents, PropertyAreasPartitionForeground) {
  Stream rng(3);
  for (int trial = 0; trial < 200; ++trial) {
    const Mask m = fedgs::testing::random_mask(rng, 3 + trial % 19, 3 + trial % 11, rng.uniform(0.05, 0.7));
    for (const auto conn : {Connectivity::Four, Connectivity::Eight}) {
      const auto lab = label_components(m, conn);
      EXPECT_EQ(std::accumulate(lab.areas.begin(), lab.areas.end(), std::size_t{0}), m.count());
      for (std::size_t i = 0; i < m.size(); ++i) {
        EXPECT_EQ(lab.labels[i] != 0, m[i]);
        EXPECT_LE(lab.labels[i], lab.count());
      }
      for (const auto a : lab.areas) EXPECT_GE(a, 1u);
      // Neighbouring foreground pixels always share a label.
      for (std::size_t r = 0; r < m.height(); ++r)
        for (std::size_t c = 0; c + 1 < m.width(); ++c)
          if (m.get(r, c) && m.get(r, c + 1)) EXPECT_EQ(lab.label_at(r, c), lab.label_at(r, c + 1));
    }
  }
}

// Expected areas come from scipy.ndimage (binary_erosion with a 3x3 square and
// border_value=0, label with 8-connectivity, binary_dilation, intersection).
TEST(SmallestLesion, TwoSeparateDisks) {
  Mask m = disk_mask(512, 512, 150, 150, 50);
  paint_disk(m, 400, 400, 5);
  const auto cfg = DifficultyConfig::blob_split();
  EXPECT_EQ(*smallest_lesion_area(m, cfg), 77u);
  EXPECT_DOUBLE_EQ(*smallest_lesion_inverse_area(m, cfg), 3404.4675324675327);
}

TEST(SmallestLesion, SingleDiskWithinReconstructionLoss) {
  const Mask m = disk_mask(64, 64, 32, 32, 10);
  ASSERT_EQ(m.count(), 317u);
  EXPECT_EQ(*smallest_lesion_area(m, DifficultyConfig::blob_split()), 313u);
}

TEST(SmallestLesion, OpeningInvariantShapeMatchesWholeMask) {
  Mask m(32, 32);
  for (std::size_t r = 5; r < 11; ++r)
    for (std::size_t c = 5; c < 11; ++c) m.set(r, c);
  const auto cfg = DifficultyConfig::blob_split();
  EXPECT_EQ(*smallest_lesion_inverse_area(m, cfg), *inverse_relative_area(m));
}

TEST(SmallestLesion, AttachedPairSeparatedByErosion) {
  Mask m = disk_mask(256, 256, 100, 100, 30);
  paint_disk(m, 100, 150, 8);
  for (std::size_t c = 130; c < 143; ++c) m.set(100, c);
  ASSERT_EQ(label_components(m, Connectivity::Eight).count(), 1u);
  const auto cfg = DifficultyConfig::blob_split();
  EXPECT_EQ(*smallest_lesion_area(m, cfg), 193u);
  EXPECT_TRUE(difficulty_factor(m, cfg).is_small);
  EXPECT_FALSE(difficulty_factor(m, DifficultyConfig::whole_mask(100.0, 150.0)).is_small);
}

TEST(SmallestLesion, FallsBackWhenErosionEmptiesMask) {
  Mask m(20, 20);
  m.set(2, 2);
  m.set(10, 10);
  m.set(10, 11);
  EXPECT_EQ(*smallest_lesion_area(m, DifficultyConfig::blob_split()), 1u);
  EXPECT_FALSE(smallest_lesion_area(Mask(8, 8), DifficultyConfig::blob_split()).has_value());
}

TEST(SmallestLesion, TinyLesionNextToLargeOneIsDroppedByErosion) {
  // Documented limitation: a lesion thinner than the element disappears when
  // another lesion survives erosion, so only the surviving one is measured.
  Mask m = disk_mask(64, 64, 20, 20, 8);
  m.set(50, 50);
  const auto area = *smallest_lesion_area(m, DifficultyConfig::blob_split());
  EXPECT_GT(area, 100u);
}

TEST(DifficultyFactor, WholeMaskExamples) {
  const auto cfg = DifficultyConfig::whole_mask(100.0, 150.0);
  const auto at150 = difficulty_from_inverse_area(150.0, cfg);
  EXPECT_TRUE(at150.is_small);
  EXPECT_NEAR(at150.delta, kDelta150, 1e-15);

  const auto at100 = difficulty_from_inverse_area(100.0, cfg);
  EXPECT_FALSE(at100.is_small);
  EXPECT_EQ(at100.delta, 0.0);
  EXPECT_NEAR(difficulty_curve(100.0, 100.0), kTanh1, 1e-15);

  const auto tumor = difficulty_from_inverse_area(1000.0, DifficultyConfig::whole_mask());
  EXPECT_TRUE(tumor.is_small);
  EXPECT_NEAR(tumor.delta, kTanh1, 1e-15);
}

TEST(DifficultyFactor, MasksGiveSameAnswerAsInverseArea) {
  // 1 foreground pixel in 150 -> a = 150 exactly.
  Mask m(10, 15);
  m.set(4, 4);
  const auto r = difficulty_factor(m, DifficultyConfig::whole_mask(100.0, 150.0));
  EXPECT_EQ(*r.inverse_area, 150.0);
  EXPECT_NEAR(r.delta, kDelta150, 1e-15);
}

TEST(DifficultyFactor, EmptyMaskIsNotSmall) {
  for (const auto& cfg : {DifficultyConfig::blob_split(), DifficultyConfig::whole_mask()}) {
    const auto r = difficulty_factor(Mask(16, 16), cfg);
    EXPECT_FALSE(r.inverse_area.has_value());
    EXPECT_FALSE(r.is_small);
    EXPECT_EQ(r.delta, 0.0);
  }
}

TEST(DifficultyFactor, CurveOracleValues) {
  EXPECT_NEAR(difficulty_curve(150.0, 100.0), kDelta150, 1e-12);
  EXPECT_NEAR(difficulty_curve(1e3, 100.0), kDelta1e3, 1e-12);
  EXPECT_NEAR(difficulty_curve(1e4, 100.0), kDelta1e4, 1e-12);
  EXPECT_NEAR(difficulty_curve(1e6, 100.0), kDelta1e6, 1e-12);
}

TEST(DifficultyFactor, SaturationStaysBelowOne) {
  EXPECT_LT(difficulty_curve(1e7, 2.0), 1.0);
  const auto r = difficulty_from_inverse_area(1e7, DifficultyConfig::whole_mask(2.0, 2.0));
  EXPECT_LT(r.delta, 1.0);
  const double d[1] = {r.delta};
  EXPECT_LT(batch_scaling_factor(d), 3.0);
}

TEST(DifficultyFactor, PropertyRangeMonotoneAndDecelerating) {
  const auto cfg = DifficultyConfig::whole_mask(100.0, 150.0);
  double prev = 0.0;
  double prev_inc = INFINITY;
  for (double a = 150.0; a <= 614400.0; a *= 2.0) {
    const double d = difficulty_from_inverse_area(a, cfg).delta;
    EXPECT_GE(d, 0.0);
    EXPECT_LT(d, 1.0);
    if (a > 150.0) {
      const double inc = d - prev;
      EXPECT_GT(inc, 0.0);
      EXPECT_LT(inc, prev_inc);
      prev_inc = inc;
    }
    prev = d;
  }
  Stream rng(5);
  for (int i = 0; i < 2000; ++i) {
    const double a = std::exp(rng.uniform(0.0, std::log(1e6)));
    const double b = a * (1.0 + rng.uniform(1e-6, 1.0));
    const auto da = difficulty_from_inverse_area(a, cfg);
    const auto db = difficulty_from_inverse_area(b, cfg);
    EXPECT_EQ(da.delta == 0.0, a < 150.0);
    if (a >= 150.0) EXPECT_LT(da.delta, db.delta);
  }
}

TEST(DifficultyConfig, Validation) {
  EXPECT_THROW(DifficultyConfig::whole_mask(1.0, 10.0).validate(), ValidationError);
  EXPECT_THROW(DifficultyConfig::whole_mask(10.0, 0.5).validate(), ValidationError);
  EXPECT_NO_THROW(DifficultyConfig::blob_split().validate());
}

TEST(BatchScalingFactor, Examples) {
  const std::vector<double> none{0, 0, 0, 0};
  const std::vector<double> one{0.8, 0, 0, 0};
  const std::vector<double> three{0.8, 0.8, 0.8, 0};
  EXPECT_EQ(batch_scaling_factor(none, 4), 1.0);
  EXPECT_NEAR(batch_scaling_factor(one, 4), 1.4, 1e-15);
  EXPECT_NEAR(batch_scaling_factor(three, 4), 2.2, 1e-15);
}

TEST(BatchScalingFactor, Errors) {
  const std::vector<double> three{0.1, 0.2, 0.3};
  EXPECT_THROW(batch_scaling_factor(three, 4), BadBatch);
  EXPECT_THROW(batch_scaling_factor(std::vector<double>{}, 0), BadBatch);
  EXPECT_THROW(batch_scaling_factor(std::vector<double>{1.0}, 1), BadBatch);
  EXPECT_THROW(batch_scaling_factor(std::vector<double>{-0.1}, 1), BadBatch);
  EXPECT_THROW(batch_scaling_factor(std::vector<double>{NAN}, 1), BadBatch);
}

TEST(Pgm, MaskRoundTripAndThreshold) {
  Stream rng(99);
  const Mask m = fedgs::testing::random_mask(rng, 13, 21, 0.4);
  std::stringstream ss;
  write_pgm(ss, mask_to_gray(m));
  EXPECT_EQ(mask_from_gray(read_pgm(ss)), m);

  // Values >= 128 are foreground; a comment in the header is skipped.
  std::stringstream raw;
  raw << "P5\n# comment\n3 1\n255\n";
  const unsigned char px[3] = {127, 128, 255};
  raw.write(reinterpret_cast<const char*>(px), 3);
  const Mask parsed = mask_from_gray(read_pgm(raw));
  EXPECT_FALSE(parsed.get(0, 0));
  EXPECT_TRUE(parsed.get(0, 1));
  EXPECT_TRUE(parsed.get(0, 2));

  const auto gray = mask_to_gray(m);
  for (const auto v : gray.pixels) EXPECT_TRUE(v == 0 || v == 255);
}

TEST(Pgm, RejectsMalformed) {
  std::stringstream bad("P2\n1 1\n255\n0");
  EXPECT_THROW(read_pgm(bad), IoError);
  std::stringstream truncated("P5\n4 4\n255\n\x01\x02");
  EXPECT_THROW(read_pgm(truncated), IoError);
  std::stringstream wide("P5\n1 1\n65535\n\x01\x02");
  EXPECT_THROW(read_pgm(wide), IoError);
}
