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

// The command-conditioned grasp network: a convolutional image encoder, an
// anchor-based grasp region proposal head, ROI feature extraction, an LSTM
// command encoder, Hadamard feature merging and two sibling output layers
// (orientation/garbage classification and per-orientation box regression).

#ifndef CGNET_MODEL_H_
#define CGNET_MODEL_H_

#include <array>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cgnet/geometry.h"
#include "cgnet/kv_config.h"
#include "cgnet/nn.h"
#include "cgnet/scene.h"

namespace cgnet {

struct BackboneStage {
  int channels = 0;
  int stride = 1;
  friend bool operator==(const BackboneStage&, const BackboneStage&) = default;
};

// "16/2,32/2,64/2" -> three 3x3 conv stages with the given widths and strides.
std::vector<BackboneStage> ParseBackbone(const std::string& spec);
std::string FormatBackbone(const std::vector<BackboneStage>& stages);

struct ModelConfig {
  int image_height = 128;
  int image_width = 128;
  std::vector<BackboneStage> backbone{{16, 2}, {32, 2}, {64, 2}, {64, 2}};
  int rpn_channels = 64;
  std::vector<double> anchor_scales{12.0, 20.0, 32.0};
  std::vector<double> anchor_ratios{0.5, 1.0, 2.0};
  int roi_pool = 7;
  int roi_samples = 2;
  std::string roi_head = "fc";  // fc | conv_gap
  int d_img = 256;
  int d_cmd = 128;
  int d_embed = 32;
  int lstm1 = 64;
  int lstm2 = 128;
  int n_orient = 19;
  int proposals_train = 64;
  int proposals_test = 300;
  double proposal_nms = 0.7;
  // When false the command branch is replaced by a constant all-ones y_cmd.
  bool command_input = true;
  int vocab_size = 1;

  static ModelConfig Toy() { return ModelConfig(); }
  static ModelConfig Full();

  void Validate() const;
  static ModelConfig FromKeyValues(KeyValueConfig& kv);
  void ToKeyValues(std::map<std::string, std::string>& out) const;
  std::string CanonicalText() const;
  std::string Hash() const;

  int Stride() const;
  int FeatureHeight() const { return image_height / Stride(); }
  int FeatureWidth() const { return image_width / Stride(); }
  int FeatureChannels() const { return backbone.back().channels; }
  int AnchorsPerCell() const {
    return static_cast<int>(anchor_scales.size() * anchor_ratios.size());
  }
  int NumAnchors() const { return FeatureHeight() * FeatureWidth() * AnchorsPerCell(); }
  int NumClasses() const { return n_orient + 2; }
};

using Delta4 = std::array<double, 4>;

// Anchor n sits at cell n / A (row-major over the feature map) with shape
// n % A (scales outer, ratios inner).
std::vector<Box> GenerateAnchors(const ModelConfig& config);

// ROI-relative center offsets and log-space size ratios.
Delta4 EncodeBox(const Box& roi, double x, double y, double w, double h);
Box DecodeAxisBox(const Box& roi, const Delta4& d);
Grasp5D DecodeBox(const Box& roi, const Delta4& d, const OrientationClass& c,
                  int n_orient);
Box ClipBox(const Box& b, int height, int width);

struct Proposal {
  Box roi;
  double rho = 0.0;
  int anchor = -1;
};

// Greedy axis-aligned suppression over proposals sorted by rho.
std::vector<Proposal> SelectProposals(std::vector<Proposal> candidates,
                                      int count, double nms_threshold);

template <typename T>
class CgnetModel {
 public:
  using Mat = nn::Matrix<T>;
  using Vec = nn::Vector<T>;
  using RowMat = nn::RowMatrix<T>;

  explicit CgnetModel(const ModelConfig& config, std::uint64_t seed = 0);
  CgnetModel(const ModelConfig& config, nn::ParamSet<T> params);

  const ModelConfig& config() const { return config_; }
  nn::ParamSet<T>& params() { return params_; }
  const nn::ParamSet<T>& params() const { return params_; }
  const std::vector<Box>& anchors() const { return anchors_; }

  struct ImageState {
    nn::FeatureMap<T> input;
    std::vector<nn::FeatureMap<T>> stages;  // post-ReLU outputs
    std::vector<RowMat> cols;
    nn::FeatureMap<T> rpn_hidden;
    RowMat rpn_cols;
    RowMat anchor_logits;  // (A, cells)
    RowMat anchor_deltas;  // (4A, cells)

    const nn::FeatureMap<T>& features() const { return stages.back(); }
  };

  struct RoiState {
    std::vector<Box> rois;
    Eigen::SparseMatrix<T> sampler;
    RowMat pooled;                        // (C, R*P*P)
    Mat head_in;                          // fc head: (C*P*P, R)
    std::vector<nn::FeatureMap<T>> maps;  // conv_gap head, per ROI
    std::vector<RowMat> map_cols;
    std::vector<nn::FeatureMap<T>> map_out;
    Mat y_img;  // (D_I, R)
  };

  struct CommandState {
    std::vector<int> tokens;
    nn::LstmCache<T> lstm1;
    nn::LstmCache<T> lstm2;
    Vec y_cmd;
  };

  struct HeadState {
    Mat reduced;  // f_red(y_img), (D_C, R)
    Mat merged;   // y_M
    Mat logits;   // (N+2, R)
    Mat gamma;
    Mat deltas;   // (4N, R), row 4c+k is component k for orientation c
  };

  ImageState ForwardImage(const Image& image) const;
  T AnchorLogit(const ImageState& s, int anchor) const;
  Delta4 AnchorDelta(const ImageState& s, int anchor) const;
  // All anchors decoded and clipped, with their probabilities.
  std::vector<Proposal> AnchorProposals(const ImageState& s) const;

  RoiState ForwardRois(const ImageState& s, const std::vector<Box>& rois) const;
  CommandState ForwardCommand(const std::vector<int>& tokens) const;
  Mat Merge(const Mat& y_img, const Vec& y_cmd) const;
  HeadState ForwardHeads(const Mat& y_img, const Vec& y_cmd) const;

  // Backward passes accumulate parameter gradients into `grads`.
  struct HeadGrad {
    Mat d_y_img;
    Vec d_y_cmd;
  };
  HeadGrad BackwardHeads(const HeadState& h, const Mat& y_img, const Vec& y_cmd,
                         const Mat& d_logits, const Mat& d_deltas,
                         nn::ParamSet<T>& grads) const;
  void BackwardCommand(const CommandState& c, const Vec& d_y_cmd,
                       nn::ParamSet<T>& grads) const;
  // Returns the gradient w.r.t. the backbone output map, (C, cells).
  RowMat BackwardRois(const ImageState& s, const RoiState& r, const Mat& d_y_img,
                      nn::ParamSet<T>& grads) const;
  void BackwardImage(const ImageState& s, RowMat d_features,
                     const RowMat& d_logits, const RowMat& d_deltas,
                     nn::ParamSet<T>& grads) const;

 private:
  void CreateParams();
  void Initialize(std::uint64_t seed);
  nn::ConvShape StageShape(std::size_t i) const;

  ModelConfig config_;
  nn::ParamSet<T> params_;
  std::vector<Box> anchors_;
};

// Per-proposal views used by inference and tests.
struct ProposalOutput {
  double rho = 0.0;
  Box roi;
  std::vector<double> y_img;
};

struct GraspPrediction {
  std::vector<double> gamma;       // N+2 class probabilities
  std::vector<Delta4> box_deltas;  // one row per orientation class
};

template <typename T>
std::vector<ProposalOutput> ExtractProposals(const CgnetModel<T>& model,
                                             const Image& image, int count);
template <typename T>
std::vector<double> EncodeCommand(const CgnetModel<T>& model,
                                  const std::vector<int>& tokens);
template <typename T>
std::vector<GraspPrediction> PredictGrasps(
    const CgnetModel<T>& model, const std::vector<ProposalOutput>& proposals,
    const std::vector<double>& y_cmd);

}  // namespace cgnet

#endif  // CGNET_MODEL_H_
