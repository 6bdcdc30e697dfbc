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

#include "cgnet/model.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "cgnet/binary_io.h"

namespace cgnet {

namespace {

// Largest log-size delta accepted when decoding, as in common detectors.
const double kMaxLogDelta = std::log(1000.0 / 16.0);

std::string JoinDoubles(const std::vector<double>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) out += ",";
    out += FormatDouble(v[i]);
  }
  return out;
}

}  // namespace

std::vector<BackboneStage> ParseBackbone(const std::string& spec) {
  std::vector<BackboneStage> stages;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto slash = item.find('/');
    if (slash == std::string::npos) {
      throw ConfigError("backbone stage '" + item + "' must be <channels>/<stride>");
    }
    BackboneStage s;
    try {
      s.channels = std::stoi(item.substr(0, slash));
      s.stride = std::stoi(item.substr(slash + 1));
    } catch (const std::exception&) {
      throw ConfigError("backbone stage '" + item + "' is not numeric");
    }
    stages.push_back(s);
  }
  if (stages.empty()) throw ConfigError("backbone needs at least one stage");
  return stages;
}

std::string FormatBackbone(const std::vector<BackboneStage>& stages) {
  std::string out;
  for (std::size_t i = 0; i < stages.size(); ++i) {
    if (i) out += ",";
    out += std::to_string(stages[i].channels) + "/" + std::to_string(stages[i].stride);
  }
  return out;
}

ModelConfig ModelConfig::Full() {
  ModelConfig c;
  c.backbone = {{64, 2}, {256, 2}, {512, 2}, {1024, 2}};
  c.rpn_channels = 512;
  c.roi_head = "conv_gap";
  c.d_img = 2048;
  c.d_cmd = 512;
  c.d_embed = 128;
  c.lstm1 = 256;
  c.lstm2 = 512;
  c.n_orient = 19;
  return c;
}

void ModelConfig::Validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("invalid model config: " + what);
  };
  require(!backbone.empty(), "backbone is empty");
  for (const auto& s : backbone) {
    require(s.channels >= 1 && s.stride >= 1, "backbone widths and strides must be >= 1");
  }
  require(image_height >= 1 && image_width >= 1, "image size must be positive");
  require(image_height % Stride() == 0 && image_width % Stride() == 0,
          "image size must be a multiple of the backbone stride " +
              std::to_string(Stride()));
  require(rpn_channels >= 1, "rpn_channels must be >= 1");
  require(!anchor_scales.empty() && !anchor_ratios.empty(), "anchor spec is empty");
  for (double v : anchor_scales) require(v > 0.0, "anchor scales must be positive");
  for (double v : anchor_ratios) require(v > 0.0, "anchor ratios must be positive");
  require(roi_pool >= 1 && roi_samples >= 1, "roi pooling sizes must be >= 1");
  require(roi_head == "fc" || roi_head == "conv_gap", "roi_head must be fc or conv_gap");
  require(d_img >= 1 && d_cmd >= 1 && d_embed >= 1 && lstm1 >= 1 && lstm2 >= 1,
          "all widths must be >= 1");
  require(n_orient >= 1, "n_orient must be >= 1");
  require(proposals_train >= 1 && proposals_test >= 1, "proposal counts must be >= 1");
  require(proposal_nms > 0.0 && proposal_nms <= 1.0, "proposal_nms must be in (0, 1]");
  require(vocab_size >= 1, "vocab_size must be >= 1");
}

ModelConfig ModelConfig::FromKeyValues(KeyValueConfig& kv) {
  ModelConfig c;
  const std::string preset = kv.GetString("preset", "toy");
  if (preset == "full") {
    c = Full();
  } else if (preset != "toy") {
    throw ConfigError("unknown model preset '" + preset + "' (expected toy or full)");
  }
  auto get_int = [&](const char* key, int& field) {
    field = static_cast<int>(kv.GetInt(key, field));
  };
  get_int("image_height", c.image_height);
  get_int("image_width", c.image_width);
  c.backbone = ParseBackbone(kv.GetString("backbone", FormatBackbone(c.backbone)));
  get_int("rpn_channels", c.rpn_channels);
  c.anchor_scales = kv.GetDoubleList("anchor_scales", c.anchor_scales);
  c.anchor_ratios = kv.GetDoubleList("anchor_ratios", c.anchor_ratios);
  get_int("roi_pool", c.roi_pool);
  get_int("roi_samples", c.roi_samples);
  c.roi_head = kv.GetString("roi_head", c.roi_head);
  get_int("d_img", c.d_img);
  get_int("d_cmd", c.d_cmd);
  get_int("d_embed", c.d_embed);
  get_int("lstm1", c.lstm1);
  get_int("lstm2", c.lstm2);
  get_int("n_orient", c.n_orient);
  get_int("proposals_train", c.proposals_train);
  get_int("proposals_test", c.proposals_test);
  c.proposal_nms = kv.GetDouble("proposal_nms", c.proposal_nms);
  c.command_input = kv.GetInt("command_input", c.command_input ? 1 : 0) != 0;
  get_int("vocab_size", c.vocab_size);
  c.Validate();
  return c;
}

void ModelConfig::ToKeyValues(std::map<std::string, std::string>& out) const {
  out["image_height"] = std::to_string(image_height);
  out["image_width"] = std::to_string(image_width);
  out["backbone"] = FormatBackbone(backbone);
  out["rpn_channels"] = std::to_string(rpn_channels);
  out["anchor_scales"] = JoinDoubles(anchor_scales);
  out["anchor_ratios"] = JoinDoubles(anchor_ratios);
  out["roi_pool"] = std::to_string(roi_pool);
  out["roi_samples"] = std::to_string(roi_samples);
  out["roi_head"] = roi_head;
  out["d_img"] = std::to_string(d_img);
  out["d_cmd"] = std::to_string(d_cmd);
  out["d_embed"] = std::to_string(d_embed);
  out["lstm1"] = std::to_string(lstm1);
  out["lstm2"] = std::to_string(lstm2);
  out["n_orient"] = std::to_string(n_orient);
  out["proposals_train"] = std::to_string(proposals_train);
  out["proposals_test"] = std::to_string(proposals_test);
  out["proposal_nms"] = FormatDouble(proposal_nms);
  out["command_input"] = command_input ? "1" : "0";
  out["vocab_size"] = std::to_string(vocab_size);
}

std::string ModelConfig::CanonicalText() const {
  std::map<std::string, std::string> kv;
  ToKeyValues(kv);
  return ToCanonicalText(kv);
}

std::string ModelConfig::Hash() const { return HexHash(CanonicalText()); }

int ModelConfig::Stride() const {
  int s = 1;
  for (const auto& b : backbone) s *= b.stride;
  return s;
}

std::vector<Box> GenerateAnchors(const ModelConfig& config) {
  const int stride = config.Stride();
  std::vector<Box> anchors;
  anchors.reserve(config.NumAnchors());
  for (int y = 0; y < config.FeatureHeight(); ++y) {
    for (int x = 0; x < config.FeatureWidth(); ++x) {
      for (double scale : config.anchor_scales) {
        for (double ratio : config.anchor_ratios) {
          // ratio is height / width; area stays scale^2.
          anchors.push_back(Box{(x + 0.5) * stride, (y + 0.5) * stride,
                                scale / std::sqrt(ratio), scale * std::sqrt(ratio)});
        }
      }
    }
  }
  return anchors;
}

Delta4 EncodeBox(const Box& roi, double x, double y, double w, double h) {
  return {(x - roi.cx) / roi.w, (y - roi.cy) / roi.h, std::log(w / roi.w),
          std::log(h / roi.h)};
}

Box DecodeAxisBox(const Box& roi, const Delta4& d) {
  return Box{roi.cx + d[0] * roi.w, roi.cy + d[1] * roi.h,
             roi.w * std::exp(std::min(d[2], kMaxLogDelta)),
             roi.h * std::exp(std::min(d[3], kMaxLogDelta))};
}

Grasp5D DecodeBox(const Box& roi, const Delta4& d, const OrientationClass& c,
                  int n_orient) {
  const double theta = ClassToTheta(c, n_orient);
  const Box b = DecodeAxisBox(roi, d);
  return Grasp5D::Make(b.cx, b.cy, theta, b.w, b.h);
}

Box ClipBox(const Box& b, int height, int width) {
  const double x1 = std::clamp(b.x1(), 0.0, static_cast<double>(width));
  const double y1 = std::clamp(b.y1(), 0.0, static_cast<double>(height));
  const double x2 = std::clamp(b.x2(), 0.0, static_cast<double>(width));
  const double y2 = std::clamp(b.y2(), 0.0, static_cast<double>(height));
  return Box::FromCorners(x1, y1, x2, y2);
}

std::vector<Proposal> SelectProposals(std::vector<Proposal> candidates,
                                      int count, double nms_threshold) {
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Proposal& a, const Proposal& b) { return a.rho > b.rho; });
  std::vector<Proposal> kept;
  for (const Proposal& p : candidates) {
    if (static_cast<int>(kept.size()) >= count) break;
    if (p.roi.w < 1.0 || p.roi.h < 1.0) continue;
    bool suppressed = false;
    if (nms_threshold < 1.0) {
      for (const Proposal& k : kept) {
        if (BoxIou(k.roi, p.roi) > nms_threshold) {
          suppressed = true;
          break;
        }
      }
    }
    if (!suppressed) kept.push_back(p);
  }
  return kept;
}

template <typename T>
CgnetModel<T>::CgnetModel(const ModelConfig& config, std::uint64_t seed)
    : config_(config) {
  config_.Validate();
  CreateParams();
  Initialize(seed);
  anchors_ = GenerateAnchors(config_);
}

template <typename T>
CgnetModel<T>::CgnetModel(const ModelConfig& config, nn::ParamSet<T> params)
    : config_(config) {
  config_.Validate();
  CreateParams();
  if (!params_.SameLayout(params)) {
    throw nn::ShapeError("parameter layout does not match the model config");
  }
  params_ = std::move(params);
  anchors_ = GenerateAnchors(config_);
}

template <typename T>
nn::ConvShape CgnetModel<T>::StageShape(std::size_t i) const {
  return nn::ConvShape{3, config_.backbone[i].stride, 1};
}

template <typename T>
void CgnetModel<T>::CreateParams() {
  const ModelConfig& c = config_;
  int in = 3;
  for (std::size_t i = 0; i < c.backbone.size(); ++i) {
    const std::string p = "backbone." + std::to_string(i);
    params_.Add(p + ".w", c.backbone[i].channels, in * 9);
    params_.Add(p + ".b", c.backbone[i].channels, 1);
    in = c.backbone[i].channels;
  }
  const int a = c.AnchorsPerCell();
  params_.Add("rpn.conv.w", c.rpn_channels, in * 9);
  params_.Add("rpn.conv.b", c.rpn_channels, 1);
  params_.Add("rpn.cls.w", a, c.rpn_channels);
  params_.Add("rpn.cls.b", a, 1);
  params_.Add("rpn.reg.w", 4 * a, c.rpn_channels);
  params_.Add("rpn.reg.b", 4 * a, 1);
  if (c.roi_head == "fc") {
    params_.Add("head.w", c.d_img, in * c.roi_pool * c.roi_pool);
  } else {
    params_.Add("head.w", c.d_img, in * 9);
  }
  params_.Add("head.b", c.d_img, 1);
  if (c.command_input) {
    params_.Add("cmd.embed", c.d_embed, c.vocab_size);
    params_.Add("cmd.lstm1.wx", 4 * c.lstm1, c.d_embed);
    params_.Add("cmd.lstm1.wh", 4 * c.lstm1, c.lstm1);
    params_.Add("cmd.lstm1.b", 4 * c.lstm1, 1);
    params_.Add("cmd.lstm2.wx", 4 * c.lstm2, c.lstm1);
    params_.Add("cmd.lstm2.wh", 4 * c.lstm2, c.lstm2);
    params_.Add("cmd.lstm2.b", 4 * c.lstm2, 1);
    params_.Add("cmd.fc.w", c.d_cmd, c.lstm2);
    params_.Add("cmd.fc.b", c.d_cmd, 1);
  }
  if (c.d_img != c.d_cmd) {
    params_.Add("merge.w", c.d_cmd, c.d_img);
    params_.Add("merge.b", c.d_cmd, 1);
  }
  params_.Add("cls.w", c.NumClasses(), c.d_cmd);
  params_.Add("cls.b", c.NumClasses(), 1);
  params_.Add("reg.w", 4 * c.n_orient, c.d_img);
  params_.Add("reg.b", 4 * c.n_orient, 1);
}

template <typename T>
void CgnetModel<T>::Initialize(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto he = [&](const std::string& name) {
    auto& w = params_[name];
    nn::FillNormal(w, std::sqrt(2.0 / static_cast<double>(w.cols())), rng);
  };
  for (std::size_t i = 0; i < config_.backbone.size(); ++i) {
    he("backbone." + std::to_string(i) + ".w");
  }
  he("rpn.conv.w");
  nn::FillNormal(params_["rpn.cls.w"], 0.01, rng);
  nn::FillNormal(params_["rpn.reg.w"], 0.01, rng);
  he("head.w");
  if (config_.command_input) {
    nn::FillNormal(params_["cmd.embed"], 0.5, rng);
    for (const std::string l : {"cmd.lstm1", "cmd.lstm2"}) {
      const double limit = 1.0 / std::sqrt(static_cast<double>(params_[l + ".wh"].cols()));
      nn::FillUniform(params_[l + ".wx"], limit, rng);
      nn::FillUniform(params_[l + ".wh"], limit, rng);
      // Forget-gate bias of one.
      const auto h = params_[l + ".wh"].cols();
      params_[l + ".b"].block(h, 0, h, 1).setOnes();
    }
    he("cmd.fc.w");
    params_["cmd.fc.b"].setConstant(T(0.1));
  }
  if (params_.Find("merge.w") >= 0) {
    auto& w = params_["merge.w"];
    nn::FillNormal(w, std::sqrt(1.0 / static_cast<double>(w.cols())), rng);
  }
  nn::FillNormal(params_["cls.w"], 0.01, rng);
  nn::FillNormal(params_["reg.w"], 0.001, rng);
}

template <typename T>
typename CgnetModel<T>::ImageState CgnetModel<T>::ForwardImage(
    const Image& image) const {
  if (image.height != config_.image_height || image.width != config_.image_width) {
    throw nn::ShapeError("image is " + std::to_string(image.height) + "x" +
                         std::to_string(image.width) + ", model expects " +
                         std::to_string(config_.image_height) + "x" +
                         std::to_string(config_.image_width));
  }
  ImageState s;
  s.input = nn::FeatureMap<T>(3, image.height, image.width);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      const std::uint8_t* p = image.at(y, x);
      for (int c = 0; c < 3; ++c) s.input.at(c, y, x) = static_cast<T>((p[c] - 127.5) / 64.0);
    }
  }
  s.stages.resize(config_.backbone.size());
  s.cols.resize(config_.backbone.size());
  const nn::FeatureMap<T>* in = &s.input;
  for (std::size_t i = 0; i < config_.backbone.size(); ++i) {
    const std::string p = "backbone." + std::to_string(i);
    s.stages[i] = nn::Conv2dForward(*in, params_[p + ".w"], params_[p + ".b"],
                                    StageShape(i), s.cols[i]);
    nn::ReluInPlace(s.stages[i].data);
    in = &s.stages[i];
  }
  s.rpn_hidden = nn::Conv2dForward(*in, params_["rpn.conv.w"], params_["rpn.conv.b"],
                                   nn::ConvShape{3, 1, 1}, s.rpn_cols);
  nn::ReluInPlace(s.rpn_hidden.data);
  s.anchor_logits = params_["rpn.cls.w"] * s.rpn_hidden.data;
  s.anchor_logits.colwise() += params_["rpn.cls.b"].col(0);
  s.anchor_deltas = params_["rpn.reg.w"] * s.rpn_hidden.data;
  s.anchor_deltas.colwise() += params_["rpn.reg.b"].col(0);
  return s;
}

template <typename T>
T CgnetModel<T>::AnchorLogit(const ImageState& s, int anchor) const {
  const int a = config_.AnchorsPerCell();
  return s.anchor_logits(anchor % a, anchor / a);
}

template <typename T>
Delta4 CgnetModel<T>::AnchorDelta(const ImageState& s, int anchor) const {
  const int a = config_.AnchorsPerCell();
  const int cell = anchor / a, k = anchor % a;
  Delta4 d;
  for (int j = 0; j < 4; ++j) d[j] = static_cast<double>(s.anchor_deltas(4 * k + j, cell));
  return d;
}

template <typename T>
std::vector<Proposal> CgnetModel<T>::AnchorProposals(const ImageState& s) const {
  std::vector<Proposal> out(anchors_.size());
  for (std::size_t n = 0; n < anchors_.size(); ++n) {
    const int i = static_cast<int>(n);
    out[n].anchor = i;
    out[n].rho = nn::Sigmoid(static_cast<double>(AnchorLogit(s, i)));
    out[n].roi = ClipBox(DecodeAxisBox(anchors_[n], AnchorDelta(s, i)),
                         config_.image_height, config_.image_width);
  }
  return out;
}

template <typename T>
typename CgnetModel<T>::RoiState CgnetModel<T>::ForwardRois(
    const ImageState& s, const std::vector<Box>& rois) const {
  const nn::FeatureMap<T>& f = s.features();
  const int p = config_.roi_pool;
  const int pp = p * p;
  const int r_count = static_cast<int>(rois.size());
  RoiState r;
  r.rois = rois;
  std::vector<nn::RoiBox> boxes;
  boxes.reserve(rois.size());
  for (const Box& b : rois) boxes.push_back({b.x1(), b.y1(), b.x2(), b.y2()});
  r.sampler = nn::RoiAlignMatrix<T>(boxes, f.height, f.width, config_.Stride(), p,
                                    config_.roi_samples);
  r.pooled = f.data * r.sampler;
  if (config_.roi_head == "fc") {
    r.head_in.resize(static_cast<Eigen::Index>(f.channels) * pp, r_count);
    for (int i = 0; i < r_count; ++i) {
      for (int c = 0; c < f.channels; ++c) {
        r.head_in.block(c * pp, i, pp, 1) = r.pooled.row(c).segment(i * pp, pp).transpose();
      }
    }
    r.y_img = params_["head.w"] * r.head_in;
    r.y_img.colwise() += params_["head.b"].col(0);
    nn::ReluInPlace(r.y_img);
  } else {
    r.y_img.resize(config_.d_img, r_count);
    r.maps.resize(r_count);
    r.map_cols.resize(r_count);
    r.map_out.resize(r_count);
    for (int i = 0; i < r_count; ++i) {
      r.maps[i] = nn::FeatureMap<T>(f.channels, p, p);
      r.maps[i].data = r.pooled.middleCols(i * pp, pp);
      r.map_out[i] = nn::Conv2dForward(r.maps[i], params_["head.w"], params_["head.b"],
                                       nn::ConvShape{3, 2, 1}, r.map_cols[i]);
      nn::ReluInPlace(r.map_out[i].data);
      r.y_img.col(i) = r.map_out[i].data.rowwise().mean();
    }
  }
  return r;
}

template <typename T>
typename CgnetModel<T>::CommandState CgnetModel<T>::ForwardCommand(
    const std::vector<int>& tokens) const {
  CommandState s;
  s.tokens = tokens;
  if (!config_.command_input) {
    s.y_cmd = Vec::Ones(config_.d_cmd);
    return s;
  }
  if (tokens.empty()) throw nn::ShapeError("command has no tokens");
  const Mat& embed = params_["cmd.embed"];
  Mat x(config_.d_embed, static_cast<Eigen::Index>(tokens.size()));
  for (std::size_t t = 0; t < tokens.size(); ++t) {
    if (tokens[t] < 0 || tokens[t] >= embed.cols()) {
      throw nn::ShapeError("token index " + std::to_string(tokens[t]) +
                           " outside vocabulary of " + std::to_string(embed.cols()));
    }
    x.col(t) = embed.col(tokens[t]);
  }
  nn::LstmForward(x, params_["cmd.lstm1.wx"], params_["cmd.lstm1.wh"],
                  params_["cmd.lstm1.b"], s.lstm1);
  const Mat h1 = s.lstm1.h.rightCols(tokens.size());
  nn::LstmForward(h1, params_["cmd.lstm2.wx"], params_["cmd.lstm2.wh"],
                  params_["cmd.lstm2.b"], s.lstm2);
  s.y_cmd = params_["cmd.fc.w"] * s.lstm2.h.col(tokens.size()) + params_["cmd.fc.b"];
  nn::ReluInPlace(s.y_cmd);
  return s;
}

template <typename T>
typename CgnetModel<T>::Mat CgnetModel<T>::Merge(const Mat& y_img,
                                                 const Vec& y_cmd) const {
  if (y_img.rows() != config_.d_img || y_cmd.size() != config_.d_cmd) {
    throw nn::ShapeError("merge expects widths " + std::to_string(config_.d_img) +
                         " and " + std::to_string(config_.d_cmd));
  }
  Mat reduced;
  if (config_.d_img != config_.d_cmd) {
    reduced = params_["merge.w"] * y_img;
    reduced.colwise() += params_["merge.b"].col(0);
  } else {
    reduced = y_img;
  }
  return reduced.array().colwise() * y_cmd.array();
}

template <typename T>
typename CgnetModel<T>::HeadState CgnetModel<T>::ForwardHeads(
    const Mat& y_img, const Vec& y_cmd) const {
  if (y_img.rows() != config_.d_img || y_cmd.size() != config_.d_cmd) {
    throw nn::ShapeError("head inputs have the wrong width");
  }
  HeadState h;
  if (config_.d_img != config_.d_cmd) {
    h.reduced = params_["merge.w"] * y_img;
    h.reduced.colwise() += params_["merge.b"].col(0);
  } else {
    h.reduced = y_img;
  }
  h.merged = h.reduced.array().colwise() * y_cmd.array();
  h.logits = params_["cls.w"] * h.merged;
  h.logits.colwise() += params_["cls.b"].col(0);
  h.gamma = nn::Softmax(h.logits);
  h.deltas = params_["reg.w"] * y_img;
  h.deltas.colwise() += params_["reg.b"].col(0);
  return h;
}

template <typename T>
typename CgnetModel<T>::HeadGrad CgnetModel<T>::BackwardHeads(
    const HeadState& h, const Mat& y_img, const Vec& y_cmd, const Mat& d_logits,
    const Mat& d_deltas, nn::ParamSet<T>& grads) const {
  HeadGrad g;
  grads["reg.w"].noalias() += d_deltas * y_img.transpose();
  grads["reg.b"].col(0) += d_deltas.rowwise().sum();
  g.d_y_img = params_["reg.w"].transpose() * d_deltas;

  grads["cls.w"].noalias() += d_logits * h.merged.transpose();
  grads["cls.b"].col(0) += d_logits.rowwise().sum();
  const Mat d_merged = params_["cls.w"].transpose() * d_logits;
  g.d_y_cmd = (d_merged.array() * h.reduced.array()).rowwise().sum().matrix();
  const Mat d_reduced = d_merged.array().colwise() * y_cmd.array();
  if (config_.d_img != config_.d_cmd) {
    grads["merge.w"].noalias() += d_reduced * y_img.transpose();
    grads["merge.b"].col(0) += d_reduced.rowwise().sum();
    g.d_y_img.noalias() += params_["merge.w"].transpose() * d_reduced;
  } else {
    g.d_y_img += d_reduced;
  }
  return g;
}

template <typename T>
void CgnetModel<T>::BackwardCommand(const CommandState& c, const Vec& d_y_cmd,
                                    nn::ParamSet<T>& grads) const {
  if (!config_.command_input) return;
  const std::size_t len = c.tokens.size();
  Vec d_pre = d_y_cmd;
  nn::ReluBackward(c.y_cmd, d_pre);
  const auto h_last = c.lstm2.h.col(len);
  grads["cmd.fc.w"].noalias() += d_pre * h_last.transpose();
  grads["cmd.fc.b"] += d_pre;
  Mat dh2 = Mat::Zero(config_.lstm2, static_cast<Eigen::Index>(len));
  dh2.col(len - 1) = params_["cmd.fc.w"].transpose() * d_pre;
  const Mat dh1 = nn::LstmBackward(c.lstm2, params_["cmd.lstm2.wx"],
                                   params_["cmd.lstm2.wh"], dh2, grads["cmd.lstm2.wx"],
                                   grads["cmd.lstm2.wh"], grads["cmd.lstm2.b"]);
  const Mat dx = nn::LstmBackward(c.lstm1, params_["cmd.lstm1.wx"],
                                  params_["cmd.lstm1.wh"], dh1, grads["cmd.lstm1.wx"],
                                  grads["cmd.lstm1.wh"], grads["cmd.lstm1.b"]);
  Mat& d_embed = grads["cmd.embed"];
  for (std::size_t t = 0; t < len; ++t) d_embed.col(c.tokens[t]) += dx.col(t);
}

template <typename T>
typename CgnetModel<T>::RowMat CgnetModel<T>::BackwardRois(
    const ImageState& s, const RoiState& r, const Mat& d_y_img,
    nn::ParamSet<T>& grads) const {
  const nn::FeatureMap<T>& f = s.features();
  const int p = config_.roi_pool;
  const int pp = p * p;
  const int r_count = static_cast<int>(r.rois.size());
  RowMat d_pooled(f.channels, static_cast<Eigen::Index>(r_count) * pp);
  if (config_.roi_head == "fc") {
    Mat d_pre = d_y_img;
    nn::ReluBackward(r.y_img, d_pre);
    grads["head.w"].noalias() += d_pre * r.head_in.transpose();
    grads["head.b"].col(0) += d_pre.rowwise().sum();
    const Mat d_in = params_["head.w"].transpose() * d_pre;
    for (int i = 0; i < r_count; ++i) {
      for (int c = 0; c < f.channels; ++c) {
        d_pooled.row(c).segment(i * pp, pp) = d_in.block(c * pp, i, pp, 1).transpose();
      }
    }
  } else {
    for (int i = 0; i < r_count; ++i) {
      const auto& out = r.map_out[i];
      const Eigen::Index cells = out.data.cols();
      RowMat d_out(out.channels, cells);
      for (Eigen::Index j = 0; j < cells; ++j) {
        d_out.col(j) = d_y_img.col(i) / static_cast<T>(cells);
      }
      nn::ReluBackward(out.data, d_out);
      nn::FeatureMap<T> d_map;
      nn::Conv2dBackward(r.maps[i], r.map_cols[i], params_["head.w"],
                         nn::ConvShape{3, 2, 1}, d_out, grads["head.w"],
                         grads["head.b"], &d_map);
      d_pooled.middleCols(i * pp, pp) = d_map.data;
    }
  }
  return d_pooled * r.sampler.transpose();
}

template <typename T>
void CgnetModel<T>::BackwardImage(const ImageState& s, RowMat d_features,
                                  const RowMat& d_logits, const RowMat& d_deltas,
                                  nn::ParamSet<T>& grads) const {
  RowMat d_hidden = params_["rpn.cls.w"].transpose() * d_logits;
  d_hidden.noalias() += params_["rpn.reg.w"].transpose() * d_deltas;
  grads["rpn.cls.w"].noalias() += d_logits * s.rpn_hidden.data.transpose();
  grads["rpn.cls.b"].col(0) += d_logits.rowwise().sum();
  grads["rpn.reg.w"].noalias() += d_deltas * s.rpn_hidden.data.transpose();
  grads["rpn.reg.b"].col(0) += d_deltas.rowwise().sum();
  nn::ReluBackward(s.rpn_hidden.data, d_hidden);
  nn::FeatureMap<T> d_in;
  nn::Conv2dBackward(s.features(), s.rpn_cols, params_["rpn.conv.w"],
                     nn::ConvShape{3, 1, 1}, d_hidden, grads["rpn.conv.w"],
                     grads["rpn.conv.b"], &d_in);
  d_features += d_in.data;
  for (int i = static_cast<int>(config_.backbone.size()) - 1; i >= 0; --i) {
    nn::ReluBackward(s.stages[i].data, d_features);
    const std::string p = "backbone." + std::to_string(i);
    const nn::FeatureMap<T>& input = i == 0 ? s.input : s.stages[i - 1];
    nn::FeatureMap<T> d_prev;
    nn::Conv2dBackward(input, s.cols[i], params_[p + ".w"], StageShape(i),
                       d_features, grads[p + ".w"], grads[p + ".b"],
                       i == 0 ? nullptr : &d_prev);
    if (i > 0) d_features = std::move(d_prev.data);
  }
}

template <typename T>
std::vector<ProposalOutput> ExtractProposals(const CgnetModel<T>& model,
                                             const Image& image, int count) {
  const auto state = model.ForwardImage(image);
  const auto kept = SelectProposals(model.AnchorProposals(state), count,
                                    model.config().proposal_nms);
  std::vector<Box> rois;
  for (const auto& p : kept) rois.push_back(p.roi);
  std::vector<ProposalOutput> out;
  if (rois.empty()) return out;
  const auto r = model.ForwardRois(state, rois);
  for (std::size_t i = 0; i < kept.size(); ++i) {
    ProposalOutput o;
    o.rho = kept[i].rho;
    o.roi = kept[i].roi;
    o.y_img.resize(r.y_img.rows());
    for (Eigen::Index j = 0; j < r.y_img.rows(); ++j) o.y_img[j] = r.y_img(j, i);
    out.push_back(std::move(o));
  }
  return out;
}

template <typename T>
std::vector<double> EncodeCommand(const CgnetModel<T>& model,
                                  const std::vector<int>& tokens) {
  const auto s = model.ForwardCommand(tokens);
  return std::vector<double>(s.y_cmd.data(), s.y_cmd.data() + s.y_cmd.size());
}

template <typename T>
std::vector<GraspPrediction> PredictGrasps(
    const CgnetModel<T>& model, const std::vector<ProposalOutput>& proposals,
    const std::vector<double>& y_cmd) {
  if (proposals.empty()) throw nn::ShapeError("no proposals to classify");
  const int d_img = model.config().d_img;
  const int n = model.config().n_orient;
  nn::Matrix<T> y(d_img, static_cast<Eigen::Index>(proposals.size()));
  for (std::size_t i = 0; i < proposals.size(); ++i) {
    if (static_cast<int>(proposals[i].y_img.size()) != d_img) {
      throw nn::ShapeError("proposal feature has the wrong width");
    }
    for (int j = 0; j < d_img; ++j) y(j, i) = static_cast<T>(proposals[i].y_img[j]);
  }
  nn::Vector<T> c(static_cast<Eigen::Index>(y_cmd.size()));
  for (std::size_t j = 0; j < y_cmd.size(); ++j) c(j) = static_cast<T>(y_cmd[j]);
  const auto h = model.ForwardHeads(y, c);
  std::vector<GraspPrediction> out(proposals.size());
  for (std::size_t i = 0; i < proposals.size(); ++i) {
    out[i].gamma.resize(h.gamma.rows());
    for (Eigen::Index j = 0; j < h.gamma.rows(); ++j) out[i].gamma[j] = h.gamma(j, i);
    out[i].box_deltas.resize(n);
    for (int k = 0; k < n; ++k) {
      for (int j = 0; j < 4; ++j) out[i].box_deltas[k][j] = h.deltas(4 * k + j, i);
    }
  }
  return out;
}

#define CGNET_MODEL_INSTANTIATE(T)                                            \
  template class CgnetModel<T>;                                               \
  template std::vector<ProposalOutput> ExtractProposals(const CgnetModel<T>&, \
                                                        const Image&, int);   \
  template std::vector<double> EncodeCommand(const CgnetModel<T>&,            \
                                             const std::vector<int>&);        \
  template std::vector<GraspPrediction> PredictGrasps(                        \
      const CgnetModel<T>&, const std::vector<ProposalOutput>&,               \
      const std::vector<double>&);

CGNET_MODEL_INSTANTIATE(float)
CGNET_MODEL_INSTANTIATE(double)

#undef CGNET_MODEL_INSTANTIATE

}  // namespace cgnet
