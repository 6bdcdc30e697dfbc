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

#include "cgnet/training.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

namespace cgnet {

Variant ParseVariant(const std::string& name) {
  if (name == "cgnet") return Variant::kCgnet;
  if (name == "agnostic") return Variant::kAgnostic;
  if (name == "retrieval") return Variant::kRetrieval;
  throw ConfigError("unknown variant '" + name + "' (expected cgnet, agnostic or retrieval)");
}

std::string VariantName(Variant v) {
  switch (v) {
    case Variant::kCgnet:
      return "cgnet";
    case Variant::kAgnostic:
      return "agnostic";
    case Variant::kRetrieval:
      return "retrieval";
  }
  return "cgnet";
}

ModelConfig ConfigureForVariant(ModelConfig config, Variant v) {
  config.command_input = v != Variant::kAgnostic;
  return config;
}

void TrainConfig::Validate() const {
  auto require = [](bool ok, const std::string& what) {
    if (!ok) throw ConfigError("invalid train config: " + what);
  };
  require(n_cls_p >= 1 && n_cls_g >= 2, "sample counts must be >= 1 (n_cls_g >= 2)");
  require(word_dropout >= 0.0 && word_dropout < 1.0, "word_dropout must be in [0, 1)");
  require(beta1 >= 0.0 && beta1 < 1.0 && beta2 >= 0.0 && beta2 < 1.0,
          "Adam betas must be in [0, 1)");
  require(lr > 0.0 && adam_eps > 0.0, "lr and adam_eps must be positive");
  require(clip_norm >= 0.0, "clip_norm must be >= 0");
  require(iterations >= 0 && batch_size >= 1, "iterations >= 0 and batch_size >= 1");
  require(iou_lo > 0.0 && iou_lo <= iou_hi && iou_hi <= 1.0,
          "IoU thresholds must satisfy 0 < lo <= hi <= 1");
  require(log_interval >= 1 && checkpoint_interval >= 0, "intervals must be >= 0");
}

TrainConfig TrainConfig::FromKeyValues(KeyValueConfig& kv) {
  TrainConfig c;
  c.n_cls_p = static_cast<int>(kv.GetInt("n_cls_p", c.n_cls_p));
  c.n_cls_g = static_cast<int>(kv.GetInt("n_cls_g", c.n_cls_g));
  c.word_dropout = kv.GetDouble("word_dropout", c.word_dropout);
  c.beta1 = kv.GetDouble("beta1", c.beta1);
  c.beta2 = kv.GetDouble("beta2", c.beta2);
  c.lr = kv.GetDouble("lr", c.lr);
  c.adam_eps = kv.GetDouble("adam_eps", c.adam_eps);
  c.clip_norm = kv.GetDouble("clip_norm", c.clip_norm);
  c.iterations = static_cast<int>(kv.GetInt("iterations", c.iterations));
  c.batch_size = static_cast<int>(kv.GetInt("batch_size", c.batch_size));
  c.seed = kv.GetUint64("seed", c.seed);
  c.iou_hi = kv.GetDouble("iou_hi", c.iou_hi);
  c.iou_lo = kv.GetDouble("iou_lo", c.iou_lo);
  c.add_gt_rois = kv.GetInt("add_gt_rois", c.add_gt_rois ? 1 : 0) != 0;
  c.log_interval = static_cast<int>(kv.GetInt("log_interval", c.log_interval));
  c.checkpoint_interval =
      static_cast<int>(kv.GetInt("checkpoint_interval", c.checkpoint_interval));
  c.variant = ParseVariant(kv.GetString("variant", VariantName(c.variant)));
  c.Validate();
  return c;
}

void TrainConfig::ToKeyValues(std::map<std::string, std::string>& out) const {
  out["n_cls_p"] = std::to_string(n_cls_p);
  out["n_cls_g"] = std::to_string(n_cls_g);
  out["word_dropout"] = FormatDouble(word_dropout);
  out["beta1"] = FormatDouble(beta1);
  out["beta2"] = FormatDouble(beta2);
  out["lr"] = FormatDouble(lr);
  out["adam_eps"] = FormatDouble(adam_eps);
  out["clip_norm"] = FormatDouble(clip_norm);
  out["iterations"] = std::to_string(iterations);
  out["batch_size"] = std::to_string(batch_size);
  out["seed"] = std::to_string(seed);
  out["iou_hi"] = FormatDouble(iou_hi);
  out["iou_lo"] = FormatDouble(iou_lo);
  out["add_gt_rois"] = add_gt_rois ? "1" : "0";
  out["log_interval"] = std::to_string(log_interval);
  out["checkpoint_interval"] = std::to_string(checkpoint_interval);
  out["variant"] = VariantName(variant);
}

std::string TrainConfig::CanonicalText() const {
  std::map<std::string, std::string> kv;
  ToKeyValues(kv);
  return ToCanonicalText(kv);
}

std::vector<GtGrasp> TrainingTargets(const Scene& scene, const Sample& sample,
                                     Variant variant, int n_orient) {
  std::vector<GtGrasp> out;
  switch (variant) {
    case Variant::kCgnet:
      // Relabelled so that the bins follow the model's n_orient.
      for (const auto& l : LabelGrasps(scene, sample.target_category, n_orient)) {
        out.push_back({l.grasp, l.label});
      }
      break;
    case Variant::kAgnostic:
      for (const auto& o : scene.objects) {
        for (const auto& g : o.grasps) {
          out.push_back({g, OrientationClass::Orientation(ThetaToClass(g.theta, n_orient))});
        }
      }
      break;
    case Variant::kRetrieval:
      for (const auto& o : scene.objects) {
        const Grasp5D box{o.bbox.cx, o.bbox.cy, 0.0, o.bbox.w, o.bbox.h};
        out.push_back({box, o.category == sample.target_category
                                ? OrientationClass::Orientation(0)
                                : OrientationClass::NotTarget()});
      }
      break;
  }
  return out;
}

std::vector<RoiAssignment> AssignRois(const std::vector<Box>& rois,
                                      const std::vector<GtGrasp>& gts, double hi,
                                      double lo, bool best_match_positive) {
  std::vector<Box> hulls;
  hulls.reserve(gts.size());
  for (const auto& g : gts) hulls.push_back(Hull(g.grasp));
  std::vector<RoiAssignment> out(rois.size());
  std::vector<double> best_for_gt(gts.size(), 0.0);
  std::vector<std::vector<double>> ious(rois.size(), std::vector<double>(gts.size()));
  for (std::size_t i = 0; i < rois.size(); ++i) {
    int best = -1;
    double best_iou = 0.0;
    for (std::size_t j = 0; j < gts.size(); ++j) {
      const double iou = BoxIou(rois[i], hulls[j]);
      ious[i][j] = iou;
      if (iou > best_iou) {
        best_iou = iou;
        best = static_cast<int>(j);
      }
      best_for_gt[j] = std::max(best_for_gt[j], iou);
    }
    RoiAssignment& a = out[i];
    a.iou = best_iou;
    if (best >= 0 && best_iou >= hi) {
      a.rho_star = RoiLabel::kPositive;
      a.gt = best;
      a.r_star = hulls[best];
      a.c_star = gts[best].label;
    } else if (best_iou < lo) {
      a.rho_star = RoiLabel::kNegative;
      a.c_star = OrientationClass::Background();
    } else {
      a.rho_star = RoiLabel::kIgnore;
      a.gt = best;
    }
  }
  if (best_match_positive) {
    for (std::size_t j = 0; j < gts.size(); ++j) {
      if (best_for_gt[j] <= 0.0) continue;
      for (std::size_t i = 0; i < rois.size(); ++i) {
        if (out[i].rho_star == RoiLabel::kPositive) continue;
        if (ious[i][j] == best_for_gt[j]) {
          out[i].rho_star = RoiLabel::kPositive;
          out[i].gt = static_cast<int>(j);
          out[i].r_star = hulls[j];
          out[i].c_star = gts[j].label;
        }
      }
    }
  }
  return out;
}

double SmoothL1(double d) {
  const double a = std::abs(d);
  return a < 1.0 ? 0.5 * d * d : a - 0.5;
}

double SmoothL1Grad(double d) {
  if (d > 1.0) return 1.0;
  if (d < -1.0) return -1.0;
  return d;
}

std::vector<int> SampleProposalRois(const std::vector<RoiAssignment>& a, int n,
                                    std::mt19937_64& rng) {
  std::vector<int> pos, neg;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].rho_star == RoiLabel::kPositive) pos.push_back(static_cast<int>(i));
    if (a[i].rho_star == RoiLabel::kNegative) neg.push_back(static_cast<int>(i));
  }
  std::shuffle(pos.begin(), pos.end(), rng);
  std::shuffle(neg.begin(), neg.end(), rng);
  const std::size_t np = std::min<std::size_t>(pos.size(), n / 2);
  const std::size_t nn_count = std::min<std::size_t>(neg.size(), n - np);
  std::vector<int> out(pos.begin(), pos.begin() + np);
  out.insert(out.end(), neg.begin(), neg.begin() + nn_count);
  const std::size_t labelled = out.size();
  for (std::size_t k = 0; labelled > 0 && out.size() < static_cast<std::size_t>(n); ++k) {
    out.push_back(out[rng() % labelled]);
  }
  return out;
}

std::vector<int> SampleFusionRois(const std::vector<RoiAssignment>& a,
                                  int max_positives, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::vector<int> pos, neg;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].rho_star == RoiLabel::kPositive) pos.push_back(static_cast<int>(i));
    if (a[i].rho_star == RoiLabel::kNegative) neg.push_back(static_cast<int>(i));
  }
  std::shuffle(pos.begin(), pos.end(), rng);
  std::shuffle(neg.begin(), neg.end(), rng);
  if (static_cast<int>(pos.size()) > max_positives) pos.resize(max_positives);
  if (neg.size() > pos.size()) neg.resize(pos.size());
  pos.insert(pos.end(), neg.begin(), neg.end());
  return pos;
}

std::vector<int> ApplyWordDropout(const std::vector<int>& tokens, double p,
                                  int unk, std::uint64_t seed) {
  if (!(p >= 0.0 && p < 1.0)) throw TrainingError("word dropout must be in [0, 1)");
  std::mt19937_64 rng(seed);
  std::bernoulli_distribution drop(p);
  std::vector<int> out = tokens;
  for (int& t : out) {
    if (drop(rng)) t = unk;
  }
  return out;
}

template <typename T>
LossTerms ProposalLoss(const nn::Vector<T>& logits, const nn::Matrix<T>& deltas,
                       const std::vector<RoiAssignment>& assign,
                       const std::vector<Delta4>& targets,
                       const std::vector<int>& sampled,
                       std::type_identity_t<nn::Vector<T>>* d_logits,
                       std::type_identity_t<nn::Matrix<T>>* d_deltas) {
  LossTerms loss;
  if (!sampled.empty()) {
    const double z_cls = static_cast<double>(sampled.size());
    for (int i : sampled) {
      const double z = static_cast<double>(logits(i));
      const double y = assign[i].rho_star == RoiLabel::kPositive ? 1.0 : 0.0;
      loss.cls += (std::max(z, 0.0) - z * y + std::log1p(std::exp(-std::abs(z)))) / z_cls;
      if (d_logits) (*d_logits)(i) += static_cast<T>((nn::Sigmoid(z) - y) / z_cls);
    }
  }
  int npos = 0;
  for (const auto& a : assign) npos += a.rho_star == RoiLabel::kPositive;
  if (npos == 0) return loss;
  for (std::size_t i = 0; i < assign.size(); ++i) {
    if (assign[i].rho_star != RoiLabel::kPositive) continue;
    for (int k = 0; k < 4; ++k) {
      const double d = static_cast<double>(deltas(k, i)) - targets[i][k];
      loss.reg += SmoothL1(d) / npos;
      if (d_deltas) (*d_deltas)(k, i) += static_cast<T>(SmoothL1Grad(d) / npos);
    }
  }
  return loss;
}

template <typename T>
LossTerms GraspLoss(const nn::Matrix<T>& logits, const nn::Matrix<T>& deltas,
                    const std::vector<RoiAssignment>& assign,
                    const std::vector<Delta4>& targets,
                    const std::vector<int>& reg_rows,
                    const std::vector<int>& cls_set, int n_orient,
                    std::type_identity_t<nn::Matrix<T>>* d_logits,
                    std::type_identity_t<nn::Matrix<T>>* d_deltas) {
  LossTerms loss;
  if (cls_set.empty()) return loss;
  const double z_cls = static_cast<double>(cls_set.size());
  int npos = 0;
  for (int i : cls_set) npos += assign[i].c_star != OrientationClass::Background();
  for (int i : cls_set) {
    const int target = assign[i].c_star.Flat(n_orient);
    const double m = static_cast<double>(logits.col(i).maxCoeff());
    double sum = 0.0;
    for (Eigen::Index c = 0; c < logits.rows(); ++c) {
      sum += std::exp(static_cast<double>(logits(c, i)) - m);
    }
    const double lse = m + std::log(sum);
    loss.cls += (lse - static_cast<double>(logits(target, i))) / z_cls;
    if (d_logits) {
      for (Eigen::Index c = 0; c < logits.rows(); ++c) {
        const double p = std::exp(static_cast<double>(logits(c, i)) - lse);
        (*d_logits)(c, i) += static_cast<T>((p - (c == target ? 1.0 : 0.0)) / z_cls);
      }
    }
    if (assign[i].c_star == OrientationClass::Background()) continue;
    const int row = reg_rows[i];
    for (int k = 0; k < 4; ++k) {
      const double d = static_cast<double>(deltas(4 * row + k, i)) - targets[i][k];
      loss.reg += SmoothL1(d) / npos;
      if (d_deltas) (*d_deltas)(4 * row + k, i) += static_cast<T>(SmoothL1Grad(d) / npos);
    }
  }
  return loss;
}

template <typename T>
LossReport ComputeLoss(const CgnetModel<T>& model, const TrainConfig& config,
                       const StepInput& input,
                       std::type_identity_t<nn::ParamSet<T>>* grads) {
  using Mat = nn::Matrix<T>;
  using RowMat = nn::RowMatrix<T>;
  const ModelConfig& mc = model.config();
  const int a_per_cell = mc.AnchorsPerCell();
  const int n_anchor = mc.NumAnchors();
  LossReport report;

  const auto state = model.ForwardImage(*input.image);

  // Proposal stage over all anchors.
  const auto& anchors = model.anchors();
  const auto a_assign = AssignRois(anchors, input.gts, config.iou_hi, config.iou_lo, true);
  std::vector<Delta4> a_targets(n_anchor);
  for (int n = 0; n < n_anchor; ++n) {
    if (a_assign[n].rho_star != RoiLabel::kPositive) continue;
    const Box& h = a_assign[n].r_star;
    a_targets[n] = EncodeBox(anchors[n], h.cx, h.cy, h.w, h.h);
    ++report.positive_anchors;
  }
  std::mt19937_64 rng(MixSeed(input.seed, 1));
  const auto sampled = SampleProposalRois(a_assign, config.n_cls_p, rng);
  nn::Vector<T> logits(n_anchor);
  Mat deltas(4, n_anchor);
  for (int n = 0; n < n_anchor; ++n) {
    const int cell = n / a_per_cell, k = n % a_per_cell;
    logits(n) = state.anchor_logits(k, cell);
    for (int j = 0; j < 4; ++j) deltas(j, n) = state.anchor_deltas(4 * k + j, cell);
  }
  nn::Vector<T> d_logits = nn::Vector<T>::Zero(n_anchor);
  Mat d_deltas = Mat::Zero(4, n_anchor);
  report.proposal = ProposalLoss(logits, deltas, a_assign, a_targets, sampled,
                                 grads ? &d_logits : nullptr,
                                 grads ? &d_deltas : nullptr);

  // Grasp stage over the selected ROIs.
  std::vector<Box> rois;
  if (input.fixed_rois) {
    rois = *input.fixed_rois;
  } else {
    for (const auto& p : SelectProposals(model.AnchorProposals(state),
                                         mc.proposals_train, mc.proposal_nms)) {
      rois.push_back(p.roi);
    }
    if (config.add_gt_rois) {
      for (const auto& g : input.gts) rois.push_back(Hull(g.grasp));
    }
  }
  const auto r_assign = AssignRois(rois, input.gts, config.iou_hi, config.iou_lo, false);
  const auto fused = SampleFusionRois(r_assign, config.n_cls_g / 2, MixSeed(input.seed, 2));
  report.fused_rois = static_cast<int>(fused.size());

  const auto& features = state.features();
  RowMat d_features = RowMat::Zero(features.channels, features.data.cols());
  if (!fused.empty()) {
    std::vector<Box> sub;
    std::vector<RoiAssignment> sub_assign;
    std::vector<Delta4> sub_targets;
    std::vector<int> rows;
    for (int i : fused) {
      sub.push_back(rois[i]);
      const RoiAssignment& a = r_assign[i];
      sub_assign.push_back(a);
      Delta4 t{0, 0, 0, 0};
      int row = -1;
      if (a.rho_star == RoiLabel::kPositive) {
        const Grasp5D& g = input.gts[a.gt].grasp;
        t = EncodeBox(rois[i], g.x, g.y, g.w, g.h);
        row = a.c_star.is_orientation() ? a.c_star.index()
                                        : ThetaToClass(g.theta, mc.n_orient);
        ++report.positive_rois;
      }
      sub_targets.push_back(t);
      rows.push_back(row);
    }
    std::vector<int> cls_set(sub.size());
    std::iota(cls_set.begin(), cls_set.end(), 0);
    const auto roi_state = model.ForwardRois(state, sub);
    const auto cmd_state = model.ForwardCommand(input.tokens);
    const auto heads = model.ForwardHeads(roi_state.y_img, cmd_state.y_cmd);
    Mat d_cls = Mat::Zero(heads.logits.rows(), heads.logits.cols());
    Mat d_reg = Mat::Zero(heads.deltas.rows(), heads.deltas.cols());
    report.grasp = GraspLoss(heads.logits, heads.deltas, sub_assign, sub_targets, rows,
                             cls_set, mc.n_orient, grads ? &d_cls : nullptr,
                             grads ? &d_reg : nullptr);
    if (grads) {
      const auto hg = model.BackwardHeads(heads, roi_state.y_img, cmd_state.y_cmd,
                                          d_cls, d_reg, *grads);
      model.BackwardCommand(cmd_state, hg.d_y_cmd, *grads);
      d_features = model.BackwardRois(state, roi_state, hg.d_y_img, *grads);
    }
  }
  if (grads) {
    RowMat d_alog(a_per_cell, state.anchor_logits.cols());
    RowMat d_adel(4 * a_per_cell, state.anchor_deltas.cols());
    for (int n = 0; n < n_anchor; ++n) {
      const int cell = n / a_per_cell, k = n % a_per_cell;
      d_alog(k, cell) = d_logits(n);
      for (int j = 0; j < 4; ++j) d_adel(4 * k + j, cell) = d_deltas(j, n);
    }
    model.BackwardImage(state, std::move(d_features), d_alog, d_adel, *grads);
  }
  return report;
}

std::uint64_t MixSeed(std::uint64_t seed, std::uint64_t stream) {
  // splitmix64 finaliser over the combined value.
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ull * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}

void AdamUpdate(nn::ParamSet<float>& params, const nn::ParamSet<float>& grads,
                AdamState& state, const TrainConfig& config) {
  if (state.m.size() == 0) {
    state.m = params.ZerosLike();
    state.v = params.ZerosLike();
  }
  double scale = 1.0;
  if (config.clip_norm > 0.0) {
    double sq = 0.0;
    for (int i = 0; i < grads.size(); ++i) sq += grads[i].cast<double>().squaredNorm();
    const double norm = std::sqrt(sq);
    if (norm > config.clip_norm) scale = config.clip_norm / norm;
  }
  ++state.step;
  const double b1 = config.beta1, b2 = config.beta2;
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  const float step = static_cast<float>(config.lr / c1);
  const float sc2 = static_cast<float>(1.0 / std::sqrt(c2));
  for (int i = 0; i < params.size(); ++i) {
    auto g = (grads[i] * static_cast<float>(scale)).eval();
    state.m[i] = static_cast<float>(b1) * state.m[i] + static_cast<float>(1 - b1) * g;
    state.v[i] = static_cast<float>(b2) * state.v[i] +
                 static_cast<float>(1 - b2) * g.cwiseProduct(g);
    params[i].array() -= step * state.m[i].array() /
                         (state.v[i].array().sqrt() * sc2 + static_cast<float>(config.adam_eps));
  }
}

Trainer::Trainer(const ModelConfig& model_config, const TrainConfig& config,
                 std::uint64_t init_seed)
    : model_(model_config, init_seed), config_(config) {
  config_.Validate();
}

Trainer::Trainer(CgnetModel<float> model, const TrainConfig& config, AdamState adam,
                 std::int64_t iteration)
    : model_(std::move(model)), config_(config), adam_(std::move(adam)),
      iteration_(iteration) {
  config_.Validate();
}

std::size_t Trainer::ScheduledSample(const TrainingSet& data,
                                     std::int64_t iteration) const {
  const std::size_t n = data.order.size();
  const auto slot = static_cast<std::uint64_t>(iteration);
  const std::uint64_t epoch = slot / n;
  std::vector<std::size_t> perm = data.order;
  std::mt19937_64 rng(MixSeed(config_.seed, 1000003ull + epoch));
  std::shuffle(perm.begin(), perm.end(), rng);
  return perm[slot % n];
}

LossReport Trainer::Step(const TrainingSet& data) {
  if (data.order.empty()) throw TrainingError("training set is empty");
  auto grads = model_.params().ZerosLike();
  LossReport mean;
  const int n_orient = model_.config().n_orient;
  for (int b = 0; b < config_.batch_size; ++b) {
    const std::int64_t slot = iteration_ * config_.batch_size + b;
    const std::uint64_t seed = MixSeed(config_.seed, static_cast<std::uint64_t>(slot));
    const std::size_t index = ScheduledSample(data, slot);
    const Sample& sample = (*data.samples)[index];
    const Scene& scene = (*data.scenes)[sample.scene_index];
    StepInput input;
    input.image = &scene.image;
    input.tokens = ApplyWordDropout(sample.tokens, config_.word_dropout, data.unk,
                                    MixSeed(seed, 3));
    input.gts = TrainingTargets(scene, sample, config_.variant, n_orient);
    input.seed = seed;
    const LossReport r = ComputeLoss(model_, config_, input, &grads);
    if (!std::isfinite(r.total())) {
      std::ostringstream msg;
      msg << "non-finite loss at iteration " << iteration_ << " (sample " << index
          << ", scene " << sample.scene_index << "): L_p cls=" << r.proposal.cls
          << " reg=" << r.proposal.reg << ", L_g cls=" << r.grasp.cls
          << " reg=" << r.grasp.reg;
      throw TrainingError(msg.str());
    }
    const double w = 1.0 / config_.batch_size;
    mean.proposal.cls += w * r.proposal.cls;
    mean.proposal.reg += w * r.proposal.reg;
    mean.grasp.cls += w * r.grasp.cls;
    mean.grasp.reg += w * r.grasp.reg;
    mean.positive_anchors += r.positive_anchors;
    mean.positive_rois += r.positive_rois;
    mean.fused_rois += r.fused_rois;
  }
  if (config_.batch_size > 1) {
    for (int i = 0; i < grads.size(); ++i) grads[i] /= static_cast<float>(config_.batch_size);
  }
  AdamUpdate(model_.params(), grads, adam_, config_);
  ++iteration_;
  return mean;
}

void Trainer::Run(const TrainingSet& data,
                  const std::function<void(const LogRow&)>& on_log,
                  const std::function<void()>& on_checkpoint) {
  const auto start = std::chrono::steady_clock::now();
  LogRow acc;
  int count = 0;
  while (iteration_ < config_.iterations) {
    const LossReport r = Step(data);
    acc.lp += r.lp();
    acc.lg += r.lg();
    ++count;
    const bool last = iteration_ == config_.iterations;
    if (on_log && (iteration_ % config_.log_interval == 0 || last)) {
      LogRow row;
      row.iteration = iteration_;
      row.lp = acc.lp / count;
      row.lg = acc.lg / count;
      row.total = row.lp + row.lg;
      row.lr = config_.lr;
      row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
                        .count();
      on_log(row);
      acc = LogRow();
      count = 0;
    }
    if (on_checkpoint && config_.checkpoint_interval > 0 &&
        iteration_ % config_.checkpoint_interval == 0 && !last) {
      on_checkpoint();
    }
  }
}

#define CGNET_TRAINING_INSTANTIATE(T)                                             \
  template LossTerms ProposalLoss(const nn::Vector<T>&, const nn::Matrix<T>&,     \
                                  const std::vector<RoiAssignment>&,              \
                                  const std::vector<Delta4>&,                     \
                                  const std::vector<int>&, nn::Vector<T>*,        \
                                  nn::Matrix<T>*);                                \
  template LossTerms GraspLoss(const nn::Matrix<T>&, const nn::Matrix<T>&,        \
                               const std::vector<RoiAssignment>&,                 \
                               const std::vector<Delta4>&,                        \
                               const std::vector<int>&, const std::vector<int>&, \
                               int, nn::Matrix<T>*, nn::Matrix<T>*);              \
  template LossReport ComputeLoss(const CgnetModel<T>&, const TrainConfig&,       \
                                  const StepInput&, nn::ParamSet<T>*);

CGNET_TRAINING_INSTANTIATE(float)
CGNET_TRAINING_INSTANTIATE(double)

#undef CGNET_TRAINING_INSTANTIATE

}  // namespace cgnet
