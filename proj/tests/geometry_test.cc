/* Copyright 2026 The CGNet Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#include "cgnet/geometry.h"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "raster_oracle.h"

namespace cgnet {
namespace {

Grasp5D RandomGrasp(std::mt19937_64& rng, double center_lo, double center_hi) {
  std::uniform_real_distribution<double> c(center_lo, center_hi);
  std::uniform_real_distribution<double> size(5.0, 60.0);
  std::uniform_real_distribution<double> angle(0.0, kPi);
  return Grasp5D::Make(c(rng), c(rng), angle(rng), size(rng), size(rng));
}

Grasp5D Near(std::mt19937_64& rng, const Grasp5D& a) {
  std::uniform_real_distribution<double> off(-40.0, 40.0);
  std::uniform_real_distribution<double> size(5.0, 60.0);
  std::uniform_real_distribution<double> angle(0.0, kPi);
  return Grasp5D::Make(a.x + off(rng), a.y + off(rng), angle(rng), size(rng),
                       size(rng));
}

TEST(ReduceModPiTest, CanonicalRange) {
  EXPECT_DOUBLE_EQ(ReduceModPi(0.0), 0.0);
  EXPECT_NEAR(ReduceModPi(kPi), 0.0, 1e-12);
  EXPECT_NEAR(ReduceModPi(-0.25), kPi - 0.25, 1e-12);
  EXPECT_NEAR(ReduceModPi(3 * kPi + 0.5), 0.5, 1e-9);
  EXPECT_LT(ReduceModPi(std::nextafter(kPi, 0.0)), kPi);
}

TEST(Grasp5DTest, MakeValidates) {
  EXPECT_THROW(Grasp5D::Make(0, 0, 0, 0.0, 1.0), GeometryError);
  EXPECT_THROW(Grasp5D::Make(0, 0, 0, 1.0, -2.0), GeometryError);
  EXPECT_THROW(Grasp5D::Make(NAN, 0, 0, 1.0, 1.0), GeometryError);
  Grasp5D g = Grasp5D::Make(-5, 2000, 4.0, 3.0, 2.0);
  EXPECT_NEAR(g.theta, 4.0 - kPi, 1e-12);
}

TEST(HullTest, RotatedQuarterTurnSwapsExtents) {
  const Box b = Hull(Grasp5D::Make(10, 20, kPi / 2, 30, 8));
  EXPECT_NEAR(b.w, 8.0, 1e-9);
  EXPECT_NEAR(b.h, 30.0, 1e-9);
}

TEST(RectIouTest, IdenticalIsOne) {
  const Grasp5D g = Grasp5D::Make(50, 40, 0.7, 30, 12);
  EXPECT_NEAR(RectIou(g, g), 1.0, 1e-12);
}

TEST(RectIouTest, DisjointIsZero) {
  const Grasp5D a = Grasp5D::Make(0, 0, 0.3, 10, 10);
  const Grasp5D b = Grasp5D::Make(1000, 0, 1.1, 10, 10);
  EXPECT_EQ(RectIou(a, b), 0.0);
}

TEST(RectIouTest, SquareVersusFortyFiveDegreeTurnMatchesRaster) {
  const Grasp5D a = Grasp5D::Make(0, 0, 0, 1, 1);
  const Grasp5D b = Grasp5D::Make(0, 0, kPi / 4, 1, 1);
  const double raster = testing::RasterIou(a, b, 2048);
  EXPECT_NEAR(RectIou(a, b), raster, 1e-3);
}

TEST(RectIouTest, DegenerateInputThrows) {
  Grasp5D bad{0, 0, 0, 0.0, 5.0};
  EXPECT_THROW(RectIou(bad, Grasp5D::Make(0, 0, 0, 1, 1)), GeometryError);
}

TEST(RectIouTest, SymmetricAndPiInvariant) {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 1000; ++i) {
    const Grasp5D a = RandomGrasp(rng, 0, 100);
    const Grasp5D b = Near(rng, a);
    const double ab = RectIou(a, b);
    EXPECT_NEAR(ab, RectIou(b, a), 1e-12);
    Grasp5D a_flipped = a;
    a_flipped.theta += kPi;
    EXPECT_NEAR(ab, RectIou(a_flipped, b), 1e-9);
    EXPECT_GE(ab, 0.0);
    EXPECT_LE(ab, 1.0);
  }
}

TEST(RectIouTest, AgreesWithRasterOracle) {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 50; ++i) {
    const Grasp5D a = RandomGrasp(rng, 0, 100);
    const Grasp5D b = Near(rng, a);
    EXPECT_NEAR(RectIou(a, b), testing::RasterIou(a, b), 1e-3) << "pair " << i;
  }
}

TEST(RasterOracleTest, RowCountingMatchesBruteForce) {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 5; ++i) {
    const Grasp5D a = RandomGrasp(rng, 0, 100);
    const Grasp5D b = Near(rng, a);
    const auto brute = testing::RasterizeBrute(a, b, 512);
    const auto rows = testing::RasterizeRows(a, b, 512);
    EXPECT_NEAR(brute.a, rows.a, 2);
    EXPECT_NEAR(brute.b, rows.b, 2);
    EXPECT_NEAR(brute.both, rows.both, 2);
  }
}

TEST(AngleErrorTest, Examples) {
  EXPECT_DOUBLE_EQ(AngleError(0.0, 0.0), 0.0);
  EXPECT_NEAR(AngleError(0.0, kPi), 0.0, 1e-12);
  // Candidates |a - b| = pi - 0.2 and pi - |a - b| = 0.2.
  EXPECT_NEAR(AngleError(0.1, kPi - 0.1), 0.2, 1e-12);
  EXPECT_NEAR(AngleError(kPi - 0.1, 0.1), 0.2, 1e-12);
  EXPECT_NEAR(AngleError(0.0, kPi / 2), kPi / 2, 1e-12);
}

TEST(AngleErrorTest, RangeAndSymmetry) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> any(-20.0, 20.0);
  for (int i = 0; i < 1000; ++i) {
    const double a = any(rng), b = any(rng);
    const double e = AngleError(a, b);
    EXPECT_GE(e, 0.0);
    EXPECT_LE(e, kPi / 2 + 1e-12);
    EXPECT_NEAR(e, AngleError(b, a), 1e-9);
  }
}

TEST(ThetaToClassTest, Examples) {
  EXPECT_EQ(ThetaToClass(0.0, 19), 0);
  // floor((pi/2) / (pi/19)) = floor(9.5)
  EXPECT_EQ(ThetaToClass(kPi / 2, 19), 9);
  EXPECT_EQ(ThetaToClass(kPi - 1e-9, 19), 18);
  EXPECT_EQ(ThetaToClass(kPi, 19), 0);
  EXPECT_EQ(ThetaToClass(-0.01, 19), 18);
  EXPECT_THROW(ThetaToClass(0.0, 0), GeometryError);
}

TEST(ThetaToClassTest, BinEdgesAreLeftClosed) {
  for (int k = 1; k < 19; ++k) {
    const double edge = k * kPi / 19;
    EXPECT_EQ(ThetaToClass(edge + 1e-12, 19), k);
    EXPECT_EQ(ThetaToClass(edge - 1e-12, 19), k - 1);
  }
}

TEST(ClassToThetaTest, BinCenters) {
  EXPECT_NEAR(ClassToTheta(0, 19), kPi / 38, 1e-15);
  EXPECT_NEAR(ClassToTheta(9, 19), kPi / 2, 1e-15);
  for (int c = 0; c < 19; ++c) EXPECT_EQ(ThetaToClass(ClassToTheta(c, 19), 19), c);
  EXPECT_THROW(ClassToTheta(OrientationClass::Background(), 19), GeometryError);
  EXPECT_THROW(ClassToTheta(OrientationClass::NotTarget(), 19), GeometryError);
}

TEST(ClassToThetaTest, BinningIsIdempotent) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> any(-10.0, 10.0);
  for (int i = 0; i < 1000; ++i) {
    const int c = ThetaToClass(any(rng), 19);
    const int c2 = ThetaToClass(ClassToTheta(c, 19), 19);
    EXPECT_EQ(c, c2);
  }
}

TEST(OrientationClassTest, FlatLayout) {
  EXPECT_EQ(NumClasses(19), 21);
  EXPECT_EQ(OrientationClass::Background().Flat(19), 19);
  EXPECT_EQ(OrientationClass::NotTarget().Flat(19), 20);
  EXPECT_EQ(OrientationClass::FromFlat(20, 19), OrientationClass::NotTarget());
  EXPECT_EQ(OrientationClass::FromFlat(4, 19).index(), 4);
  EXPECT_THROW(OrientationClass::Background().index(), GeometryError);
  EXPECT_THROW(OrientationClass::FromFlat(21, 19), GeometryError);
}

TEST(RotatedNmsTest, EmptyAndSingle) {
  EXPECT_TRUE(RotatedNms({}, 0.5).empty());
  std::vector<ScoredGrasp> one{{Grasp5D::Make(5, 5, 0.2, 10, 4), 0.3}};
  const auto out = RotatedNms(one, 0.5);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].grasp, one[0].grasp);
}

TEST(RotatedNmsTest, IdenticalPairKeepsHigher) {
  const Grasp5D g = Grasp5D::Make(5, 5, 0.2, 10, 4);
  std::vector<ScoredGrasp> in{{g, 0.8}, {g, 0.9}};
  const auto out = RotatedNms(in, 0.5);
  ASSERT_EQ(out.size(), 1u);
  EXPECT_EQ(out[0].score, 0.9);
}

// A and C are disjoint while each overlaps B. Two rectangles that each cover
// more than half of B must intersect, so the chain IoUs are at most 0.5; the
// chain below has IoU(A,B) = IoU(B,C) = 8/18 and runs at threshold 0.4.
TEST(RotatedNmsTest, ChainKeepsEnds) {
  const Grasp5D a = Grasp5D::Make(5, 5, 0, 10, 10);
  const Grasp5D b = Grasp5D::Make(10, 5, 0, 16, 10);
  const Grasp5D c = Grasp5D::Make(15.001, 5, 0, 10, 10);
  ASSERT_NEAR(RectIou(a, b), 8.0 / 18.0, 1e-9);
  ASSERT_NEAR(RectIou(b, c), 8.0 / 18.0, 1e-3);
  ASSERT_EQ(RectIou(a, c), 0.0);
  std::vector<ScoredGrasp> in{{c, 0.5}, {a, 0.9}, {b, 0.7}};
  const auto out = RotatedNms(in, 0.4);
  ASSERT_EQ(out.size(), 2u);
  EXPECT_EQ(out[0].grasp, a);
  EXPECT_EQ(out[1].grasp, c);
}

TEST(RotatedNmsTest, RetainedSetIsSparseAndIdempotent) {
  std::mt19937_64 rng(21);
  std::uniform_real_distribution<double> score(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<ScoredGrasp> in;
    for (int i = 0; i < 40; ++i) {
      in.push_back({RandomGrasp(rng, 0, 80), score(rng)});
    }
    const auto once = RotatedNms(in, 0.5);
    for (std::size_t i = 0; i < once.size(); ++i) {
      if (i > 0) EXPECT_GE(once[i - 1].score, once[i].score);
      for (std::size_t j = i + 1; j < once.size(); ++j) {
        EXPECT_LE(RectIou(once[i].grasp, once[j].grasp), 0.5);
      }
    }
    const auto twice = RotatedNms(once, 0.5);
    ASSERT_EQ(once.size(), twice.size());
    for (std::size_t i = 0; i < once.size(); ++i) {
      EXPECT_EQ(once[i].grasp, twice[i].grasp);
      EXPECT_EQ(once[i].score, twice[i].score);
    }
  }
}

}  // namespace
}  // namespace cgnet
