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

// Test-time grasp retrieval, detection scoring, R@k / P@k and the
// comparison baselines.

#ifndef CGNET_EVAL_H_
#define CGNET_EVAL_H_

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cgnet/dataset.h"
#include "cgnet/geometry.h"
#include "cgnet/model.h"

namespace cgnet {

class EvalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Detection {
  Grasp5D grasp;
  double score = 0.0;
  OrientationClass cls = OrientationClass::Orientation(0);
  Box roi;
  Box axis_box;  // regressed (x, y, w, h) as an axis-aligned box
};

// Visual half of inference, shared by every command on the same image.
struct ImageEncoding {
  std::vector<Box> rois;
  nn::Matrix<float> y_img;  // (D_I, R)
};

ImageEncoding EncodeImage(const CgnetModel<float>& model, const Image& image);

// The ROI survives only if its best orientation probability beats both
// garbage classes.
std::optional<Detection> DecodeRoi(const Box& roi, const std::vector<double>& gamma,
                                   const std::vector<Delta4>& deltas, int n_orient);

inline constexpr double kDetectionNms = 0.5;

std::vector<Detection> Infer(const CgnetModel<float>& model, const ImageEncoding& enc,
                             const std::vector<int>& tokens,
                             double nms_threshold = kDetectionNms);
std::vector<Detection> Infer(const CgnetModel<float>& model, const Image& image,
                             const std::vector<int>& tokens,
                             double nms_threshold = kDetectionNms);

inline constexpr double kCorrectIou = 0.25;
inline constexpr double kCorrectAngle = kPi / 6.0;

bool ScoreDetection(const Grasp5D& det, const std::vector<Grasp5D>& gt_grasps);

// Per-sample metrics over a score-sorted correctness list. Precision divides
// by min(k, #detections) and is 0 for an empty list.
double SampleRecallAtK(const std::vector<bool>& correct, int k);
double SamplePrecisionAtK(const std::vector<bool>& correct, int k);
double RecallAtK(const std::vector<std::vector<bool>>& per_sample, int k);
double PrecisionAtK(const std::vector<std::vector<bool>>& per_sample, int k);

// Baseline building blocks.
std::vector<Detection> RandomOrder(std::vector<Detection> dets, std::uint64_t seed);
// Top retrieval detection as an axis-aligned box, if any.
std::optional<Box> RetrievalBox(const std::vector<Detection>& retrieval);
// Detections whose centers lie inside `region`, nearest center first.
std::vector<Detection> RankInsideRegion(const std::vector<Detection>& dets,
                                        const Box& region);
// Detections whose centers lie inside `region`, original order kept.
std::vector<Detection> FilterToRegion(const std::vector<Detection>& dets,
                                      const Box& region);

const std::vector<std::string>& MethodNames();  // cgnet agn_rnd ret_gr cg_ret
std::vector<std::string> ParseMethods(const std::string& csv);

struct EvalModels {
  const CgnetModel<float>* cgnet = nullptr;
  const CgnetModel<float>* agnostic = nullptr;
  const CgnetModel<float>* retrieval = nullptr;
};

inline const std::vector<int> kReportKs{1, 3, 5, 10};

struct MethodRow {
  std::string method;
  int samples = 0;
  std::vector<double> recall;     // per kReportKs
  std::vector<double> precision;  // per kReportKs
  int nt_samples = 0;
  double nt_rejection = 0.0;  // fraction of no-target samples with no output
  double fps = 0.0;           // 0 when not measured
};

struct EvalReport {
  std::string split;
  double chance_floor = 0.0;
  std::vector<MethodRow> rows;

  const MethodRow& Row(const std::string& method) const;
  // Columns: method R@1 R@3 R@5 R@10 P@1 P@3 P@5 P@10 NT FPS.
  std::string ToTable(bool with_fps = true) const;
  std::string ToJson(bool with_fps = true) const;
};

struct EvalOptions {
  std::vector<std::string> methods{"cgnet"};
  bool no_target = true;   // also score NT rejection
  std::uint64_t seed = 1;  // agn_rnd ordering
  int fps_samples = 20;    // 0 disables throughput timing
};

// Mean over have-target samples of (#target grasps / #grasps in scene): the
// expected top-1 hit rate of a uniform pick among all grasps.
double ChanceFloor(const DatasetBundle& data, const std::vector<std::size_t>& samples);

EvalReport Evaluate(const DatasetBundle& data, const std::vector<std::size_t>& samples,
                    const EvalModels& models, const EvalOptions& options);

// Final ranked detections of `method` for one sample, plus the retrieval box
// when the method uses one.
struct MethodOutput {
  std::vector<Detection> detections;
  std::optional<Box> region;
};
MethodOutput RunMethod(const std::string& method, const Image& image,
                       const std::vector<int>& tokens, const EvalModels& models,
                       std::uint64_t seed);

}  // namespace cgnet

#endif  // CGNET_EVAL_H_
