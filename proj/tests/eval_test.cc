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

#include "cgnet/eval.h"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "cgnet/render.h"
#include "micro_fixture.h"
#include "raster_oracle.h"

namespace cgnet {
namespace {

const std::string kAssets = CGNET_ASSET_DIR;

std::vector<double> Gamma(int n_orient, int hot, double p) {
  std::vector<double> g(n_orient + 2, (1.0 - p) / (n_orient + 1));
  g[hot] = p;
  return g;
}

TEST(DecodeRoiTest, GarbageClassesActAsThreshold) {
  const std::vector<Delta4> deltas(19, Delta4{0, 0, 0, 0});
  const Box roi{50, 50, 20, 10};
  EXPECT_FALSE(DecodeRoi(roi, Gamma(19, 19, 0.6), deltas, 19).has_value());  // BG
  EXPECT_FALSE(DecodeRoi(roi, Gamma(19, 20, 0.6), deltas, 19).has_value());  // NT
  auto tie = Gamma(19, 3, 0.4);
  tie[20] = 0.4;
  EXPECT_FALSE(DecodeRoi(roi, tie, deltas, 19).has_value());
}

TEST(DecodeRoiTest, ArgmaxOrientationIsDecoded) {
  std::vector<Delta4> deltas(19, Delta4{0, 0, 0, 0});
  deltas[5] = {0.1, 0.0, std::log(2.0), 0.0};
  const auto d = DecodeRoi(Box{50, 50, 20, 10}, Gamma(19, 5, 0.9), deltas, 19);
  ASSERT_TRUE(d.has_value());
  EXPECT_EQ(d->cls, OrientationClass::Orientation(5));
  EXPECT_DOUBLE_EQ(d->grasp.theta, ClassToTheta(OrientationClass::Orientation(5), 19));
  EXPECT_DOUBLE_EQ(d->score, 0.9);
  EXPECT_NEAR(d->grasp.x, 52.0, 1e-12);
  EXPECT_NEAR(d->grasp.w, 40.0, 1e-12);
  EXPECT_NEAR(d->axis_box.w, 40.0, 1e-12);
}

TEST(ScoreDetectionTest, ThresholdExamples) {
  const Grasp5D gt = Grasp5D::Make(50, 50, 0.3, 30, 12);
  EXPECT_TRUE(ScoreDetection(gt, {gt}));
  EXPECT_FALSE(ScoreDetection(Grasp5D::Make(50, 50, 0.3 + kPi / 4, 30, 12), {gt}));
  EXPECT_FALSE(ScoreDetection(gt, {}));
}

TEST(ScoreDetectionTest, ModestOverlapWithSmallAngleErrorCounts) {
  const Grasp5D gt = Grasp5D::Make(60, 60, 0.0, 40, 20);
  const double ten_deg = 10.0 * kPi / 180.0;
  // Slide the detection along x until the overlap is about 0.3.
  Grasp5D det = gt;
  for (double dx = 0.0; dx < 40.0; dx += 0.25) {
    det = Grasp5D::Make(60 + dx, 60, ten_deg, 40, 20);
    if (RectIou(det, gt) < 0.3) break;
  }
  const double oracle = testing::RasterIou(det, gt);
  EXPECT_NEAR(RectIou(det, gt), oracle, 1e-3);
  EXPECT_GT(oracle, 0.25);
  EXPECT_LT(oracle, 0.31);
  std::vector<Grasp5D> gts{Grasp5D::Make(10, 10, 1.0, 10, 5), Grasp5D::Make(110, 20, 0.5, 12, 6),
                           gt, Grasp5D::Make(20, 110, 2.0, 8, 4),
                           Grasp5D::Make(100, 100, 0.0, 10, 10)};
  EXPECT_TRUE(ScoreDetection(det, gts));
  gts.erase(gts.begin() + 2);
  EXPECT_FALSE(ScoreDetection(det, gts));
}

TEST(ScoreDetectionTest, SymmetricUnderHalfTurn) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> pos(30, 70), ang(0, kPi), size(5, 40);
  for (int i = 0; i < 300; ++i) {
    const Grasp5D a{pos(rng), pos(rng), ang(rng), size(rng), size(rng)};
    const Grasp5D b{pos(rng), pos(rng), ang(rng), size(rng), size(rng)};
    Grasp5D a_flip = a, b_flip = b;
    a_flip.theta += kPi;
    b_flip.theta += kPi;
    const bool base = ScoreDetection(a, {b});
    EXPECT_EQ(ScoreDetection(a_flip, {b}), base);
    EXPECT_EQ(ScoreDetection(a, {b_flip}), base);
  }
}

TEST(MetricsTest, DefinitionExamples) {
  const std::vector<bool> all(10, true);
  for (int k : {1, 3, 5, 10}) {
    EXPECT_EQ(SampleRecallAtK(all, k), 1.0);
    EXPECT_EQ(SamplePrecisionAtK(all, k), 1.0);
  }
  const std::vector<bool> late{false, true, false};
  EXPECT_EQ(SampleRecallAtK(late, 1), 0.0);
  EXPECT_EQ(SampleRecallAtK(late, 3), 1.0);
  EXPECT_NEAR(SamplePrecisionAtK({true, false, true}, 3), 2.0 / 3.0, 1e-15);
  // Fewer than k detections: divide by what was produced.
  EXPECT_NEAR(SamplePrecisionAtK({true, false, true}, 10), 2.0 / 3.0, 1e-15);
  EXPECT_EQ(SamplePrecisionAtK({}, 1), 0.0);
  EXPECT_EQ(SampleRecallAtK({}, 5), 0.0);
  EXPECT_THROW(SampleRecallAtK(all, 0), EvalError);
  EXPECT_THROW(PrecisionAtK({all}, -1), EvalError);
  EXPECT_NEAR(RecallAtK({all, late, {}}, 1), 1.0 / 3.0, 1e-15);
}

TEST(MetricsTest, RecallIsMonotoneInK) {
  std::mt19937_64 rng(8);
  std::vector<std::vector<bool>> samples;
  for (int s = 0; s < 200; ++s) {
    std::vector<bool> c(rng() % 15);
    for (std::size_t i = 0; i < c.size(); ++i) c[i] = rng() % 4 == 0;
    samples.push_back(c);
  }
  double prev = 0.0;
  for (int k = 1; k <= 15; ++k) {
    const double r = RecallAtK(samples, k);
    EXPECT_GE(r, prev);
    EXPECT_LE(r, 1.0);
    prev = r;
  }
}

Detection At(double x, double y, double score) {
  Detection d;
  d.grasp = Grasp5D::Make(x, y, 0.0, 10, 4);
  d.score = score;
  d.axis_box = Hull(d.grasp);
  return d;
}

TEST(BaselineTest, OracleRegionReducesToDistanceRankedInsideGrasps) {
  SceneConfig sc;
  const Scene scene = GenerateScene(sc, 31);
  const SceneObject& target = scene.objects[0];
  std::vector<Detection> all;
  double s = 1.0;
  for (const auto& o : scene.objects) {
    for (const auto& g : o.grasps) {
      Detection d;
      d.grasp = g;
      d.score = (s -= 0.01);
      all.push_back(d);
    }
  }
  const auto ranked = RankInsideRegion(all, target.bbox);
  ASSERT_GE(ranked.size(), target.grasps.size());
  double prev = -1.0;
  for (const auto& d : ranked) {
    EXPECT_GE(d.grasp.x, target.bbox.x1());
    EXPECT_LE(d.grasp.x, target.bbox.x2());
    EXPECT_GE(d.grasp.y, target.bbox.y1());
    EXPECT_LE(d.grasp.y, target.bbox.y2());
    const double dist = std::hypot(d.grasp.x - target.bbox.cx, d.grasp.y - target.bbox.cy);
    EXPECT_GE(dist, prev);
    prev = dist;
  }
  for (const auto& g : target.grasps) {
    EXPECT_TRUE(std::any_of(ranked.begin(), ranked.end(),
                            [&](const Detection& d) { return d.grasp == g; }));
  }
}

TEST(BaselineTest, RegionFilterKeepsScoreOrder) {
  const std::vector<Detection> dets{At(10, 10, 0.9), At(50, 50, 0.8), At(45, 52, 0.7),
                                    At(90, 90, 0.6)};
  const Box region = Box::FromCorners(40, 40, 60, 60);
  const auto f = FilterToRegion(dets, region);
  ASSERT_EQ(f.size(), 2u);
  EXPECT_EQ(f[0].score, 0.8);
  EXPECT_EQ(f[1].score, 0.7);
  EXPECT_FALSE(RetrievalBox({}).has_value());
  EXPECT_EQ(RetrievalBox(dets)->cx, dets[0].axis_box.cx);
}

TEST(BaselineTest, RandomOrderIsSeededPermutation) {
  std::vector<Detection> dets;
  for (int i = 0; i < 12; ++i) dets.push_back(At(10 + i, 10, 1.0 - 0.01 * i));
  const auto a = RandomOrder(dets, 3);
  EXPECT_EQ(a.size(), dets.size());
  std::vector<double> sa, sb;
  for (const auto& d : a) sa.push_back(d.score);
  for (const auto& d : RandomOrder(dets, 3)) sb.push_back(d.score);
  EXPECT_EQ(sa, sb);
  std::sort(sa.begin(), sa.end(), std::greater<>());
  for (std::size_t i = 0; i < dets.size(); ++i) EXPECT_EQ(sa[i], dets[i].score);
}

TEST(MethodTest, ParseRejectsUnknownNamesAndListsValidOnes) {
  EXPECT_EQ(ParseMethods("cgnet,agn_rnd"), (std::vector<std::string>{"cgnet", "agn_rnd"}));
  try {
    ParseMethods("cgnet,magic");
    FAIL();
  } catch (const EvalError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("magic"), std::string::npos);
    for (const auto& m : MethodNames()) EXPECT_NE(msg.find(m), std::string::npos);
  }
  EXPECT_THROW(ParseMethods(""), EvalError);
}

// A small dataset and an untrained micro network biased towards one
// orientation class so that every ROI yields a detection.
struct EvalFixture {
  DatasetBundle data;
  std::optional<CgnetModel<float>> cgnet, agnostic, retrieval;

  EvalFixture() {
    GenerateConfig gc;
    gc.num_scenes = 8;
    gc.train_fraction = 0.5;
    gc.templates_file = kAssets + "/templates.txt";
    gc.seed = 3;
    data = GenerateBundle(gc);
    ModelConfig mc = testing::MicroConfig();
    mc.n_orient = 19;
    mc.vocab_size = data.vocab.size();
    mc.proposals_test = 40;
    cgnet.emplace(mc, 1);
    cgnet->params()["cls.b"](4) = 6.0f;
    agnostic.emplace(ConfigureForVariant(mc, Variant::kAgnostic), 2);
    agnostic->params()["cls.b"](7) = 6.0f;
    retrieval.emplace(mc, 3);
    retrieval->params()["cls.b"](0) = 6.0f;
  }
  EvalModels models() const { return {&*cgnet, &*agnostic, &*retrieval}; }
};

TEST(InferTest, EmitsSortedSuppressedOrientationDetections) {
  EvalFixture f;
  const auto& s = f.data.samples[0];
  const auto dets = Infer(*f.cgnet, f.data.scenes[s.scene_index].image, s.tokens);
  ASSERT_FALSE(dets.empty());
  for (std::size_t i = 0; i < dets.size(); ++i) {
    EXPECT_TRUE(dets[i].cls.is_orientation());
    if (i > 0) EXPECT_GE(dets[i - 1].score, dets[i].score);
    for (std::size_t j = 0; j < i; ++j) {
      EXPECT_LE(RectIou(dets[i].grasp, dets[j].grasp), kDetectionNms);
    }
  }
  f.cgnet->params()["cls.b"](4) = -20.0f;
  f.cgnet->params()["cls.b"](20) = 20.0f;  // NT dominates
  EXPECT_TRUE(Infer(*f.cgnet, f.data.scenes[s.scene_index].image, s.tokens).empty());
}

TEST(EvaluateTest, ReportIsDeterministicAndWellFormed) {
  EvalFixture f;
  EvalOptions opt;
  opt.methods = MethodNames();
  opt.fps_samples = 0;
  const auto idx = f.data.SampleIndices("test");
  const EvalReport a = Evaluate(f.data, idx, f.models(), opt);
  const EvalReport b = Evaluate(f.data, idx, f.models(), opt);
  EXPECT_EQ(a.ToJson(false), b.ToJson(false));
  EXPECT_EQ(a.ToTable(false), b.ToTable(false));
  ASSERT_EQ(a.rows.size(), 4u);
  for (const auto& r : a.rows) {
    EXPECT_GT(r.samples, 0);
    EXPECT_GT(r.nt_samples, 0);
    for (std::size_t k = 0; k < kReportKs.size(); ++k) {
      EXPECT_GE(r.recall[k], 0.0);
      EXPECT_LE(r.precision[k], 1.0);
      if (k > 0) EXPECT_GE(r.recall[k], r.recall[k - 1]);
    }
    EXPECT_GE(r.nt_rejection, 0.0);
    EXPECT_LE(r.nt_rejection, 1.0);
  }
  EXPECT_GT(a.chance_floor, 0.0);
  EXPECT_LT(a.chance_floor, 1.0);
  EXPECT_EQ(a.Row("agn_rnd").nt_rejection, 0.0);
  EXPECT_NE(a.ToTable().find("R@1\tR@3\tR@5\tR@10\tP@1"), std::string::npos);
}

TEST(EvaluateTest, FailsOnMissingCheckpointOrEmptySplit) {
  EvalFixture f;
  EvalOptions opt;
  opt.methods = {"ret_gr"};
  EvalModels m = f.models();
  m.retrieval = nullptr;
  try {
    Evaluate(f.data, f.data.SampleIndices("test"), m, opt);
    FAIL();
  } catch (const EvalError& e) {
    EXPECT_NE(std::string(e.what()).find("retrieval checkpoint"), std::string::npos);
  }
  opt.methods = {"cgnet"};
  EXPECT_THROW(Evaluate(f.data, {}, f.models(), opt), EvalError);
}

TEST(EvaluateTest, ChanceFloorMatchesGraspCounts) {
  EvalFixture f;
  const auto idx = f.data.SampleIndices("train", false);
  double sum = 0.0;
  for (std::size_t i : idx) {
    const Sample& s = f.data.samples[i];
    const Scene& scene = f.data.scenes[s.scene_index];
    for (const auto& o : scene.objects) {
      if (o.category == s.target_category) {
        sum += static_cast<double>(o.grasps.size()) / scene.NumGrasps();
      }
    }
  }
  EXPECT_NEAR(ChanceFloor(f.data, idx), sum / idx.size(), 1e-12);
}

// ---------------------------------------------------------------- render

int CountColor(const Image& img, Rgb c) {
  int n = 0;
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const auto* p = img.at(y, x);
      n += p[0] == c.r && p[1] == c.g && p[2] == c.b;
    }
  }
  return n;
}

TEST(RenderTest, TopOneDrawsASingleRedRectangle) {
  const Image blank(64, 64);
  std::vector<Detection> dets{At(20, 20, 0.9), At(45, 45, 0.5)};
  const Image one = RenderDetections(blank, dets, 1, std::nullopt);
  const Image only_first = RenderDetections(blank, {dets[0]}, 5, std::nullopt);
  EXPECT_GT(CountColor(one, kDetectionColor), 0);
  EXPECT_EQ(one, only_first);
  const Image two = RenderDetections(blank, dets, 2, Box{32, 32, 20, 20});
  EXPECT_GT(CountColor(two, kDetectionColor), CountColor(one, kDetectionColor));
  EXPECT_GT(CountColor(two, kRegionColor), 0);
}

TEST(RenderTest, EmptyPredictionIsAnnotatedAndOutputIsDeterministic) {
  Image bg(40, 64);
  std::fill(bg.pixels.begin(), bg.pixels.end(), 128);
  const Image a = RenderDetections(bg, {}, 1, std::nullopt);
  EXPECT_GT(CountColor(a, kTextColor), 20);
  EXPECT_EQ(CountColor(a, kDetectionColor), 0);
  const std::string ppm = EncodePpm(a);
  EXPECT_EQ(ppm.rfind("P6\n64 40\n255\n", 0), 0u);
  EXPECT_EQ(ppm.size(), std::string("P6\n64 40\n255\n").size() + 3 * 64 * 40);
  EXPECT_EQ(EncodePpm(RenderDetections(bg, {}, 1, std::nullopt)), ppm);
}

}  // namespace
}  // namespace cgnet
