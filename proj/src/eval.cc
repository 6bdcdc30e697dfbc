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

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <nlohmann/json.hpp>
#include <numeric>
#include <random>
#include <sstream>

#include "cgnet/training.h"

namespace cgnet {

ImageEncoding EncodeImage(const CgnetModel<float>& model, const Image& image) {
  const auto state = model.ForwardImage(image);
  const auto kept = SelectProposals(model.AnchorProposals(state),
                                    model.config().proposals_test,
                                    model.config().proposal_nms);
  ImageEncoding enc;
  for (const auto& p : kept) enc.rois.push_back(p.roi);
  if (enc.rois.empty()) return enc;
  enc.y_img = model.ForwardRois(state, enc.rois).y_img;
  return enc;
}

std::optional<Detection> DecodeRoi(const Box& roi, const std::vector<double>& gamma,
                                   const std::vector<Delta4>& deltas, int n_orient) {
  if (static_cast<int>(gamma.size()) != n_orient + 2 ||
      static_cast<int>(deltas.size()) != n_orient) {
    throw EvalError("class scores do not match the orientation count");
  }
  const auto best = std::max_element(gamma.begin(), gamma.begin() + n_orient);
  const double garbage = std::max(gamma[n_orient], gamma[n_orient + 1]);
  if (*best <= garbage) return std::nullopt;
  const int c = static_cast<int>(best - gamma.begin());
  const auto cls = OrientationClass::Orientation(c);
  Detection d;
  d.cls = cls;
  d.score = *best;
  d.roi = roi;
  d.axis_box = DecodeAxisBox(roi, deltas[c]);
  d.grasp = DecodeBox(roi, deltas[c], cls, n_orient);
  return d;
}

std::vector<Detection> Infer(const CgnetModel<float>& model, const ImageEncoding& enc,
                             const std::vector<int>& tokens, double nms_threshold) {
  std::vector<Detection> out;
  if (enc.rois.empty()) return out;
  const int n = model.config().n_orient;
  const auto cmd = model.ForwardCommand(tokens);
  const auto h = model.ForwardHeads(enc.y_img, cmd.y_cmd);
  std::vector<ScoredGrasp> scored;
  std::vector<double> gamma(n + 2);
  std::vector<Delta4> deltas(n);
  for (std::size_t i = 0; i < enc.rois.size(); ++i) {
    const auto col = static_cast<Eigen::Index>(i);
    for (int j = 0; j < n + 2; ++j) gamma[j] = h.gamma(j, col);
    for (int c = 0; c < n; ++c) {
      for (int k = 0; k < 4; ++k) deltas[c][k] = h.deltas(4 * c + k, col);
    }
    auto d = DecodeRoi(enc.rois[i], gamma, deltas, n);
    if (!d) continue;
    out.push_back(*d);
  }
  // Rotated NMS; equal scores keep ROI order.
  std::vector<std::size_t> order(out.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](auto a, auto b) { return out[a].score > out[b].score; });
  std::vector<Detection> kept;
  for (std::size_t i : order) {
    const bool suppressed = std::any_of(kept.begin(), kept.end(), [&](const auto& k) {
      return RectIou(k.grasp, out[i].grasp) > nms_threshold;
    });
    if (!suppressed) kept.push_back(out[i]);
  }
  return kept;
}

std::vector<Detection> Infer(const CgnetModel<float>& model, const Image& image,
                             const std::vector<int>& tokens, double nms_threshold) {
  return Infer(model, EncodeImage(model, image), tokens, nms_threshold);
}

bool ScoreDetection(const Grasp5D& det, const std::vector<Grasp5D>& gt_grasps) {
  return std::any_of(gt_grasps.begin(), gt_grasps.end(), [&](const Grasp5D& g) {
    return AngleError(det.theta, g.theta) < kCorrectAngle && RectIou(det, g) > kCorrectIou;
  });
}

namespace {

void CheckK(int k) {
  if (k <= 0) throw EvalError("k must be positive, got " + std::to_string(k));
}

bool CenterInside(const Detection& d, const Box& region) {
  return d.grasp.x >= region.x1() && d.grasp.x <= region.x2() &&
         d.grasp.y >= region.y1() && d.grasp.y <= region.y2();
}

}  // namespace

double SampleRecallAtK(const std::vector<bool>& correct, int k) {
  CheckK(k);
  const auto end = correct.begin() + std::min<std::size_t>(k, correct.size());
  return std::find(correct.begin(), end, true) != end ? 1.0 : 0.0;
}

double SamplePrecisionAtK(const std::vector<bool>& correct, int k) {
  CheckK(k);
  const std::size_t m = std::min<std::size_t>(k, correct.size());
  if (m == 0) return 0.0;
  const auto hits = std::count(correct.begin(), correct.begin() + m, true);
  return static_cast<double>(hits) / static_cast<double>(m);
}

double RecallAtK(const std::vector<std::vector<bool>>& per_sample, int k) {
  CheckK(k);
  if (per_sample.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& c : per_sample) sum += SampleRecallAtK(c, k);
  return sum / static_cast<double>(per_sample.size());
}

double PrecisionAtK(const std::vector<std::vector<bool>>& per_sample, int k) {
  CheckK(k);
  if (per_sample.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& c : per_sample) sum += SamplePrecisionAtK(c, k);
  return sum / static_cast<double>(per_sample.size());
}

std::vector<Detection> RandomOrder(std::vector<Detection> dets, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::shuffle(dets.begin(), dets.end(), rng);
  return dets;
}

std::optional<Box> RetrievalBox(const std::vector<Detection>& retrieval) {
  if (retrieval.empty()) return std::nullopt;
  return retrieval.front().axis_box;
}

std::vector<Detection> RankInsideRegion(const std::vector<Detection>& dets,
                                        const Box& region) {
  std::vector<Detection> inside = FilterToRegion(dets, region);
  auto dist = [&](const Detection& d) {
    return std::hypot(d.grasp.x - region.cx, d.grasp.y - region.cy);
  };
  std::stable_sort(inside.begin(), inside.end(),
                   [&](const auto& a, const auto& b) { return dist(a) < dist(b); });
  return inside;
}

std::vector<Detection> FilterToRegion(const std::vector<Detection>& dets,
                                      const Box& region) {
  std::vector<Detection> out;
  for (const auto& d : dets) {
    if (CenterInside(d, region)) out.push_back(d);
  }
  return out;
}

const std::vector<std::string>& MethodNames() {
  static const std::vector<std::string> names{"cgnet", "agn_rnd", "ret_gr", "cg_ret"};
  return names;
}

std::vector<std::string> ParseMethods(const std::string& csv) {
  std::vector<std::string> out;
  std::stringstream ss(csv);
  std::string m;
  while (std::getline(ss, m, ',')) {
    if (m.empty()) continue;
    const auto& valid = MethodNames();
    if (std::find(valid.begin(), valid.end(), m) == valid.end()) {
      std::string list;
      for (const auto& v : valid) list += (list.empty() ? "" : ", ") + v;
      throw EvalError("unknown method '" + m + "' (valid: " + list + ")");
    }
    if (std::find(out.begin(), out.end(), m) == out.end()) out.push_back(m);
  }
  if (out.empty()) throw EvalError("no evaluation methods given");
  return out;
}

namespace {

struct Needs {
  bool cgnet = false, agnostic = false, retrieval = false;
};

Needs MethodNeeds(const std::string& method) {
  if (method == "cgnet") return {true, false, false};
  if (method == "agn_rnd") return {false, true, false};
  if (method == "ret_gr") return {false, true, true};
  if (method == "cg_ret") return {true, false, true};
  throw EvalError("unknown method '" + method + "'");
}

void RequireModels(const std::string& method, const EvalModels& models) {
  const Needs n = MethodNeeds(method);
  auto missing = [&](const char* what) {
    throw EvalError("method '" + method + "' needs the " + what + " checkpoint");
  };
  if (n.cgnet && !models.cgnet) missing("cgnet");
  if (n.agnostic && !models.agnostic) missing("agnostic");
  if (n.retrieval && !models.retrieval) missing("retrieval");
}

// Per-scene cache of image encodings and command-independent outputs.
struct SceneCache {
  std::optional<ImageEncoding> cgnet, agnostic, retrieval;
  std::optional<std::vector<Detection>> agnostic_dets;
};

const ImageEncoding& Encoding(std::optional<ImageEncoding>& slot,
                              const CgnetModel<float>& model, const Image& image) {
  if (!slot) slot = EncodeImage(model, image);
  return *slot;
}

MethodOutput Combine(const std::string& method, const std::vector<Detection>* cg,
                     const std::vector<Detection>* agn,
                     const std::vector<Detection>* ret, std::uint64_t seed) {
  MethodOutput out;
  if (method == "cgnet") {
    out.detections = *cg;
  } else if (method == "agn_rnd") {
    out.detections = RandomOrder(*agn, seed);
  } else {
    out.region = RetrievalBox(*ret);
    if (out.region) {
      out.detections = method == "ret_gr" ? RankInsideRegion(*agn, *out.region)
                                          : FilterToRegion(*cg, *out.region);
    }
  }
  return out;
}

std::string Fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, v);
  return buf;
}

}  // namespace

MethodOutput RunMethod(const std::string& method, const Image& image,
                       const std::vector<int>& tokens, const EvalModels& models,
                       std::uint64_t seed) {
  RequireModels(method, models);
  const Needs n = MethodNeeds(method);
  std::vector<Detection> cg, agn, ret;
  if (n.cgnet) cg = Infer(*models.cgnet, image, tokens);
  if (n.agnostic) agn = Infer(*models.agnostic, image, tokens);
  if (n.retrieval) ret = Infer(*models.retrieval, image, tokens);
  return Combine(method, &cg, &agn, &ret, seed);
}

double ChanceFloor(const DatasetBundle& data, const std::vector<std::size_t>& samples) {
  double sum = 0.0;
  int count = 0;
  for (std::size_t i : samples) {
    const Sample& s = data.samples[i];
    if (!s.has_target() || s.grasp_labels.empty()) continue;
    const auto targets = std::count_if(s.grasp_labels.begin(), s.grasp_labels.end(),
                                       [](const auto& g) { return g.label.is_orientation(); });
    sum += static_cast<double>(targets) / static_cast<double>(s.grasp_labels.size());
    ++count;
  }
  return count > 0 ? sum / count : 0.0;
}

const MethodRow& EvalReport::Row(const std::string& method) const {
  for (const auto& r : rows) {
    if (r.method == method) return r;
  }
  throw EvalError("report has no row for method '" + method + "'");
}

std::string EvalReport::ToTable(bool with_fps) const {
  std::ostringstream os;
  os << "method";
  for (int k : kReportKs) os << "\tR@" << k;
  for (int k : kReportKs) os << "\tP@" << k;
  os << "\tNT";
  if (with_fps) os << "\tFPS";
  os << '\n';
  for (const auto& r : rows) {
    os << r.method;
    for (double v : r.recall) os << '\t' << Fixed(100.0 * v, 1);
    for (double v : r.precision) os << '\t' << Fixed(100.0 * v, 1);
    os << '\t' << (r.nt_samples > 0 ? Fixed(100.0 * r.nt_rejection, 1) : "-");
    if (with_fps) os << '\t' << Fixed(r.fps, 2);
    os << '\n';
  }
  return os.str();
}

std::string EvalReport::ToJson(bool with_fps) const {
  nlohmann::ordered_json j;
  j["split"] = split;
  j["chance_floor"] = chance_floor;
  nlohmann::ordered_json arr = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json o;
    o["method"] = r.method;
    o["samples"] = r.samples;
    for (std::size_t i = 0; i < kReportKs.size(); ++i) {
      o["R@" + std::to_string(kReportKs[i])] = r.recall[i];
    }
    for (std::size_t i = 0; i < kReportKs.size(); ++i) {
      o["P@" + std::to_string(kReportKs[i])] = r.precision[i];
    }
    o["nt_samples"] = r.nt_samples;
    o["nt_rejection"] = r.nt_rejection;
    if (with_fps) o["fps"] = r.fps;
    arr.push_back(o);
  }
  j["methods"] = arr;
  return j.dump(2) + "\n";
}

EvalReport Evaluate(const DatasetBundle& data, const std::vector<std::size_t>& samples,
                    const EvalModels& models, const EvalOptions& options) {
  if (options.methods.empty()) throw EvalError("no evaluation methods given");
  for (const auto& m : options.methods) RequireModels(m, models);
  std::vector<std::size_t> used;
  for (std::size_t i : samples) {
    if (data.samples.at(i).has_target() || options.no_target) used.push_back(i);
  }
  if (used.empty()) throw EvalError("evaluation split has no samples");

  Needs need;
  for (const auto& m : options.methods) {
    const Needs n = MethodNeeds(m);
    need.cgnet |= n.cgnet;
    need.agnostic |= n.agnostic;
    need.retrieval |= n.retrieval;
  }

  const std::size_t nm = options.methods.size();
  std::vector<std::vector<std::vector<bool>>> correct(nm);
  std::vector<int> nt_total(nm, 0), nt_empty(nm, 0);

  // Visit samples scene by scene so each image is encoded once per model.
  std::vector<std::size_t> visit = used;
  std::stable_sort(visit.begin(), visit.end(), [&](auto a, auto b) {
    return data.samples[a].scene_index < data.samples[b].scene_index;
  });
  SceneCache sc;
  std::size_t cached_scene = data.scenes.size();
  for (std::size_t idx : visit) {
    const Sample& s = data.samples[idx];
    const Image& image = data.scenes[s.scene_index].image;
    if (s.scene_index != cached_scene) {
      sc = SceneCache{};
      cached_scene = s.scene_index;
    }
    std::vector<Detection> cg, agn, ret;
    if (need.cgnet) cg = Infer(*models.cgnet, Encoding(sc.cgnet, *models.cgnet, image), s.tokens);
    if (need.agnostic) {
      // The agnostic model ignores the command, so one pass per scene suffices.
      if (!sc.agnostic_dets) {
        sc.agnostic_dets =
            Infer(*models.agnostic, Encoding(sc.agnostic, *models.agnostic, image), s.tokens);
      }
      agn = *sc.agnostic_dets;
    }
    if (need.retrieval) {
      ret = Infer(*models.retrieval, Encoding(sc.retrieval, *models.retrieval, image),
                  s.tokens);
    }
    std::vector<Grasp5D> targets;
    for (const auto& g : s.grasp_labels) {
      if (g.label.is_orientation()) targets.push_back(g.grasp);
    }
    for (std::size_t m = 0; m < nm; ++m) {
      const auto out = Combine(options.methods[m], &cg, &agn, &ret,
                               MixSeed(options.seed, idx));
      if (!s.has_target()) {
        ++nt_total[m];
        nt_empty[m] += out.detections.empty();
        continue;
      }
      std::vector<bool> c;
      for (const auto& d : out.detections) c.push_back(ScoreDetection(d.grasp, targets));
      correct[m].push_back(std::move(c));
    }
  }

  EvalReport report;
  report.chance_floor = ChanceFloor(data, used);
  for (std::size_t m = 0; m < nm; ++m) {
    MethodRow row;
    row.method = options.methods[m];
    row.samples = static_cast<int>(correct[m].size());
    for (int k : kReportKs) {
      row.recall.push_back(RecallAtK(correct[m], k));
      row.precision.push_back(PrecisionAtK(correct[m], k));
    }
    row.nt_samples = nt_total[m];
    row.nt_rejection = nt_total[m] > 0 ? static_cast<double>(nt_empty[m]) / nt_total[m] : 0.0;
    if (options.fps_samples > 0) {
      const std::size_t n = std::min<std::size_t>(options.fps_samples, used.size());
      const auto t0 = std::chrono::steady_clock::now();
      for (std::size_t i = 0; i < n; ++i) {
        const Sample& s = data.samples[used[i]];
        RunMethod(row.method, data.scenes[s.scene_index].image, s.tokens, models,
                  MixSeed(options.seed, used[i]));
      }
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      row.fps = secs > 0.0 ? static_cast<double>(n) / secs : 0.0;
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace cgnet
