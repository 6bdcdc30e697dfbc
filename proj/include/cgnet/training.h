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

// Ground-truth assignment, the proposal and grasp losses, ROI sampling, word
// dropout and the Adam training loop.

#ifndef CGNET_TRAINING_H_
#define CGNET_TRAINING_H_

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <type_traits>
#include <vector>

#include "cgnet/command.h"
#include "cgnet/geometry.h"
#include "cgnet/kv_config.h"
#include "cgnet/model.h"
#include "cgnet/nn.h"

namespace cgnet {

class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// cgnet: command-conditioned grasps. agnostic: every grasp is a target and
// the command is ignored. retrieval: the named object's bounding box is the
// single "grasp" (one orientation class), other objects are NT.
enum class Variant { kCgnet, kAgnostic, kRetrieval };
Variant ParseVariant(const std::string& name);
std::string VariantName(Variant v);
// The agnostic variant drops the command branch; the others keep it.
ModelConfig ConfigureForVariant(ModelConfig config, Variant v);

struct TrainConfig {
  int n_cls_p = 128;
  int n_cls_g = 128;
  double word_dropout = 0.1;
  double beta1 = 0.9;
  double beta2 = 0.99;
  double lr = 1e-4;
  double adam_eps = 1e-8;
  double clip_norm = 10.0;  // 0 disables
  int iterations = 20000;
  int batch_size = 1;
  std::uint64_t seed = 1;
  double iou_hi = 0.5;
  double iou_lo = 0.3;
  bool add_gt_rois = true;
  int log_interval = 100;
  int checkpoint_interval = 0;  // 0: only the final checkpoint
  Variant variant = Variant::kCgnet;

  void Validate() const;
  static TrainConfig FromKeyValues(KeyValueConfig& kv);
  void ToKeyValues(std::map<std::string, std::string>& out) const;
  std::string CanonicalText() const;
};

// A ground-truth grasp with its class: an orientation bin or NT.
struct GtGrasp {
  Grasp5D grasp;
  OrientationClass label = OrientationClass::NotTarget();
};

std::vector<GtGrasp> TrainingTargets(const Scene& scene, const Sample& sample,
                                     Variant variant, int n_orient);

enum class RoiLabel { kPositive, kNegative, kIgnore };

struct RoiAssignment {
  RoiLabel rho_star = RoiLabel::kIgnore;
  Box r_star;  // hull of the matched grasp
  OrientationClass c_star = OrientationClass::Background();
  int gt = -1;  // matched grasp, -1 when negative
  double iou = 0.0;
};

// Max-IoU matching of axis-aligned ROIs against grasp hulls. With
// `best_match_positive` every grasp also claims its highest-IoU ROIs.
std::vector<RoiAssignment> AssignRois(const std::vector<Box>& rois,
                                      const std::vector<GtGrasp>& gts, double hi,
                                      double lo, bool best_match_positive = false);

double SmoothL1(double d);
double SmoothL1Grad(double d);

// Up to n/2 positives, the rest negatives; short samples are padded by
// resampling the labelled pool with replacement.
std::vector<int> SampleProposalRois(const std::vector<RoiAssignment>& a, int n,
                                    std::mt19937_64& rng);

// All positives (at most `max_positives`) plus an equal number of negatives.
std::vector<int> SampleFusionRois(const std::vector<RoiAssignment>& a,
                                  int max_positives, std::uint64_t seed);

std::vector<int> ApplyWordDropout(const std::vector<int>& tokens, double p,
                                  int unk, std::uint64_t seed);

struct LossTerms {
  double cls = 0.0;
  double reg = 0.0;
  double total() const { return cls + reg; }
};

// logits: one per ROI. deltas: (4, R). Classification is averaged over
// `sampled`; regression sums over all positives and divides by their count.
template <typename T>
LossTerms ProposalLoss(const nn::Vector<T>& logits, const nn::Matrix<T>& deltas,
                       const std::vector<RoiAssignment>& assign,
                       const std::vector<Delta4>& targets,
                       const std::vector<int>& sampled,
                       std::type_identity_t<nn::Vector<T>>* d_logits,
                       std::type_identity_t<nn::Matrix<T>>* d_deltas);

// logits: (N+2, R), deltas: (4N, R). Cross entropy is averaged over the
// columns listed in `cls_set`; every non-BG column in `cls_set` also
// contributes smooth L1 on its `reg_rows` block, divided by the number of
// such columns.
template <typename T>
LossTerms GraspLoss(const nn::Matrix<T>& logits, const nn::Matrix<T>& deltas,
                    const std::vector<RoiAssignment>& assign,
                    const std::vector<Delta4>& targets,
                    const std::vector<int>& reg_rows,
                    const std::vector<int>& cls_set, int n_orient,
                    std::type_identity_t<nn::Matrix<T>>* d_logits,
                    std::type_identity_t<nn::Matrix<T>>* d_deltas);

struct StepInput {
  const Image* image = nullptr;
  std::vector<int> tokens;
  std::vector<GtGrasp> gts;
  std::uint64_t seed = 0;
  // When set, replaces proposal selection (and GT ROI augmentation).
  const std::vector<Box>* fixed_rois = nullptr;
};

struct LossReport {
  LossTerms proposal;
  LossTerms grasp;
  int positive_anchors = 0;
  int positive_rois = 0;
  int fused_rois = 0;
  double lp() const { return proposal.total(); }
  double lg() const { return grasp.total(); }
  double total() const { return lp() + lg(); }
};

// L = L_p + L_g for one sample; adds dL/dθ into `grads` when non-null.
template <typename T>
LossReport ComputeLoss(const CgnetModel<T>& model, const TrainConfig& config,
                       const StepInput& input,
                       std::type_identity_t<nn::ParamSet<T>>* grads);

std::uint64_t MixSeed(std::uint64_t seed, std::uint64_t stream);

struct AdamState {
  nn::ParamSet<float> m;
  nn::ParamSet<float> v;
  std::int64_t step = 0;
};

void AdamUpdate(nn::ParamSet<float>& params, const nn::ParamSet<float>& grads,
                AdamState& state, const TrainConfig& config);

struct TrainingSet {
  const std::vector<Scene>* scenes = nullptr;
  const std::vector<Sample>* samples = nullptr;
  std::vector<std::size_t> order;  // sample indices used for training
  int unk = 0;
};

struct LogRow {
  std::int64_t iteration = 0;
  double lp = 0.0;
  double lg = 0.0;
  double total = 0.0;
  double lr = 0.0;
  double seconds = 0.0;
};

class Trainer {
 public:
  Trainer(const ModelConfig& model_config, const TrainConfig& config,
          std::uint64_t init_seed);
  Trainer(CgnetModel<float> model, const TrainConfig& config, AdamState adam,
          std::int64_t iteration);

  // Runs one optimisation step on the sample scheduled for the current
  // iteration and returns its (pre-update) loss.
  LossReport Step(const TrainingSet& data);
  // Steps until `iterations` is reached. `on_log` receives averaged rows every
  // log_interval steps; `on_checkpoint` fires every checkpoint_interval steps.
  void Run(const TrainingSet& data, const std::function<void(const LogRow&)>& on_log,
           const std::function<void()>& on_checkpoint);

  std::size_t ScheduledSample(const TrainingSet& data, std::int64_t iteration) const;

  CgnetModel<float>& model() { return model_; }
  const CgnetModel<float>& model() const { return model_; }
  const TrainConfig& config() const { return config_; }
  const AdamState& adam() const { return adam_; }
  std::int64_t iteration() const { return iteration_; }

 private:
  CgnetModel<float> model_;
  TrainConfig config_;
  AdamState adam_;
  std::int64_t iteration_ = 0;
};

}  // namespace cgnet

#endif  // CGNET_TRAINING_H_
