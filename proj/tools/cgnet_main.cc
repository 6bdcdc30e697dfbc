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

// cgnet: generate / train / eval / infer / render.

#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <nlohmann/json.hpp>
#include <optional>
#include <string>
#include <vector>

#include "cgnet/binary_io.h"
#include "cgnet/checkpoint.h"
#include "cgnet/command.h"
#include "cgnet/dataset.h"
#include "cgnet/eval.h"
#include "cgnet/kv_config.h"
#include "cgnet/model.h"
#include "cgnet/render.h"
#include "cgnet/training.h"

namespace fs = std::filesystem;
using namespace cgnet;

namespace {

// Relative output paths are placed under $CGNET_OUT_ROOT when it is set.
std::string OutPath(const std::string& out) {
  const char* root = std::getenv("CGNET_OUT_ROOT");
  if (!root || !*root || fs::path(out).is_absolute()) return out;
  return (fs::path(root) / out).string();
}

std::string ParentDir(const std::string& path) {
  const fs::path p = fs::path(path).parent_path();
  return p.empty() ? "." : p.string();
}

void RequireDataset(const std::string& dir) {
  if (!fs::exists(fs::path(dir) / "manifest.json")) {
    throw FormatError("dataset '" + dir + "' not found (no manifest.json)");
  }
}

std::string DatasetHash(const std::string& dir) {
  const auto m = nlohmann::json::parse(ReadWholeFile((fs::path(dir) / "manifest.json").string()));
  return m.value("config_hash", "");
}

// ---------------------------------------------------------------- generate

struct GenerateArgs {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
};

int RunGenerate(const GenerateArgs& a) {
  KeyValueConfig kv = KeyValueConfig::Load(a.config);
  GenerateConfig gc = GenerateConfig::FromKeyValues(kv, ParentDir(a.config));
  kv.RejectUnknownKeys();
  if (a.seed) gc.seed = *a.seed;
  const DatasetBundle b = GenerateBundle(gc);
  const std::string out = OutPath(a.out);
  WriteBundle(b, out);
  const auto train = b.SampleIndices("train");
  const auto test = b.SampleIndices("test");
  const std::size_t nt = b.CountNoTarget();
  std::printf("scenes %zu  samples %zu  have-target %zu  no-target %zu (%.1f%%)\n",
              b.scenes.size(), b.samples.size(), b.samples.size() - nt, nt,
              100.0 * static_cast<double>(nt) / static_cast<double>(b.samples.size()));
  std::printf("train samples %zu  test samples %zu  templates %zu  vocabulary %d\n",
              train.size(), test.size(), b.templates.size(), b.vocab.size());
  std::printf("wrote %s\n", out.c_str());
  return 0;
}

// ---------------------------------------------------------------- train

struct TrainArgs {
  std::string data;
  std::string config;
  std::string model_config;
  std::string out;
  std::string variant;
  std::string resume;
  std::optional<std::uint64_t> seed;
  std::optional<int> iterations;
  std::uint64_t init_seed = 0;
};

std::string TrainManifest(const TrainArgs& a, const ModelConfig& mc, const TrainConfig& tc,
                          std::int64_t iteration) {
  nlohmann::ordered_json m;
  m["tool_version"] = kToolVersion;
  m["kind"] = "checkpoint";
  m["variant"] = VariantName(tc.variant);
  m["dataset"] = a.data;
  m["dataset_config_hash"] = DatasetHash(a.data);
  m["model_config_hash"] = mc.Hash();
  m["train_config_hash"] = HexHash(tc.CanonicalText());
  m["train_seed"] = tc.seed;
  m["init_seed"] = a.init_seed;
  m["iteration"] = iteration;
  if (!a.resume.empty()) m["resumed_from"] = a.resume;
  return m.dump(2);
}

int RunTrain(const TrainArgs& a) {
  RequireDataset(a.data);
  const std::string out = OutPath(a.out);
  fs::create_directories(out);

  std::optional<Checkpoint> resume;
  if (!a.resume.empty()) resume = LoadCheckpoint(a.resume);

  TrainConfig tc;
  if (!a.config.empty()) {
    KeyValueConfig kv = KeyValueConfig::Load(a.config);
    tc = TrainConfig::FromKeyValues(kv);
    kv.RejectUnknownKeys();
  } else if (resume) {
    KeyValueConfig kv = KeyValueConfig::Parse(resume->train_config_text);
    tc = TrainConfig::FromKeyValues(kv);
  }
  if (!a.variant.empty()) tc.variant = ParseVariant(a.variant);
  if (a.seed) tc.seed = *a.seed;
  if (a.iterations) tc.iterations = *a.iterations;
  tc.Validate();

  ModelConfig mc;
  if (resume) {
    mc = resume->model;
  } else if (!a.model_config.empty()) {
    KeyValueConfig kv = KeyValueConfig::Load(a.model_config);
    mc = ModelConfig::FromKeyValues(kv);
    kv.RejectUnknownKeys();
  }
  const DatasetBundle data = ReadBundle(a.data, mc.n_orient);
  if (resume) {
    if (resume->vocabulary != data.vocab.words()) {
      throw ConfigError("checkpoint vocabulary does not match the dataset");
    }
  } else {
    mc.vocab_size = data.vocab.size();
    mc = ConfigureForVariant(mc, tc.variant);
  }
  mc.Validate();

  std::optional<Trainer> trainer;
  if (resume) {
    trainer.emplace(CgnetModel<float>(mc, resume->params), tc, resume->adam, resume->iteration);
  } else {
    trainer.emplace(mc, tc, a.init_seed);
  }

  TrainingSet ts;
  ts.scenes = &data.scenes;
  ts.samples = &data.samples;
  ts.order = data.SampleIndices("train");
  ts.unk = data.vocab.unk();
  if (ts.order.empty()) throw ConfigError("dataset has no training samples");

  const std::string metrics = (fs::path(out) / "metrics.tsv").string();
  const bool append = resume.has_value() && fs::exists(metrics);
  std::FILE* log = std::fopen(metrics.c_str(), append ? "a" : "w");
  if (!log) throw FormatError("cannot write " + metrics);
  if (!append) std::fprintf(log, "iteration\tlp\tlg\ttotal\tlr\tseconds\n");

  auto save = [&](const std::string& name) {
    Checkpoint ck;
    ck.model = mc;
    ck.train_config_text = tc.CanonicalText();
    ck.manifest = TrainManifest(a, mc, tc, trainer->iteration());
    ck.vocabulary = data.vocab.words();
    ck.params = trainer->model().params();
    ck.adam = trainer->adam();
    ck.iteration = trainer->iteration();
    const std::string path = (fs::path(out) / name).string();
    SaveCheckpoint(ck, path);
    return path;
  };

  std::printf("training %s: %zu samples, %d iterations from %lld\n",
              VariantName(tc.variant).c_str(), ts.order.size(), tc.iterations,
              static_cast<long long>(trainer->iteration()));
  trainer->Run(
      ts,
      [&](const LogRow& r) {
        std::fprintf(log, "%lld\t%.6f\t%.6f\t%.6f\t%g\t%.1f\n",
                     static_cast<long long>(r.iteration), r.lp, r.lg, r.total, r.lr, r.seconds);
        std::fflush(log);
        std::printf("iter %6lld  lp %.4f  lg %.4f  total %.4f  (%.0fs)\n",
                    static_cast<long long>(r.iteration), r.lp, r.lg, r.total, r.seconds);
        std::fflush(stdout);
      },
      [&]() {
        char name[64];
        std::snprintf(name, sizeof(name), "checkpoint_%07lld.cgck",
                      static_cast<long long>(trainer->iteration()));
        save(name);
      });
  std::fclose(log);
  std::printf("wrote %s\n", save("final.cgck").c_str());
  return 0;
}

// ---------------------------------------------------------------- eval

struct ModelArgs {
  std::string cgnet;
  std::string agnostic;
  std::string retrieval;
};

struct LoadedModels {
  std::optional<CgnetModel<float>> cgnet, agnostic, retrieval;
  EvalModels view() const {
    return {cgnet ? &*cgnet : nullptr, agnostic ? &*agnostic : nullptr,
            retrieval ? &*retrieval : nullptr};
  }
};

std::optional<CgnetModel<float>> LoadModel(const std::string& path, const Vocabulary& vocab) {
  if (path.empty()) return std::nullopt;
  if (!fs::exists(path)) throw FormatError("checkpoint '" + path + "' not found");
  Checkpoint ck = LoadCheckpoint(path);
  if (ck.vocabulary != vocab.words()) {
    throw ConfigError("checkpoint '" + path + "' was trained with a different vocabulary");
  }
  return CgnetModel<float>(ck.model, std::move(ck.params));
}

LoadedModels LoadModels(const ModelArgs& a, const Vocabulary& vocab) {
  LoadedModels m;
  m.cgnet = LoadModel(a.cgnet, vocab);
  m.agnostic = LoadModel(a.agnostic, vocab);
  m.retrieval = LoadModel(a.retrieval, vocab);
  return m;
}

int ModelOrient(const ModelArgs& a) {
  for (const auto* p : {&a.cgnet, &a.agnostic, &a.retrieval}) {
    if (!p->empty() && fs::exists(*p)) return LoadCheckpoint(*p).model.n_orient;
  }
  return 19;
}

struct EvalArgs {
  std::string data;
  ModelArgs models;
  std::string methods = "cgnet";
  std::string split = "test";
  std::string out;
  bool no_target = false;
  int fps_samples = 20;
  std::uint64_t seed = 1;
};

int RunEval(const EvalArgs& a) {
  const auto methods = ParseMethods(a.methods);
  RequireDataset(a.data);
  const DatasetBundle data = ReadBundle(a.data, ModelOrient(a.models));
  const LoadedModels models = LoadModels(a.models, data.vocab);
  EvalOptions opt;
  opt.methods = methods;
  opt.no_target = a.no_target;
  opt.seed = a.seed;
  opt.fps_samples = a.fps_samples;
  EvalReport report = Evaluate(data, data.SampleIndices(a.split, a.no_target),
                               models.view(), opt);
  report.split = a.split;
  const bool fps = a.fps_samples > 0;
  std::printf("chance floor %.1f\n%s", 100.0 * report.chance_floor,
              report.ToTable(fps).c_str());
  if (!a.out.empty()) {
    const std::string out = OutPath(a.out);
    fs::create_directories(out);
    WriteWholeFile((fs::path(out) / "report.tsv").string(), report.ToTable(fps));
    WriteWholeFile((fs::path(out) / "report.json").string(), report.ToJson(fps));
    std::printf("wrote %s\n", out.c_str());
  }
  return 0;
}

// ---------------------------------------------------------------- infer

struct InferArgs {
  std::string data;
  ModelArgs models;
  std::string method = "cgnet";
  std::size_t scene = 0;
  std::string command;
  int top_k = 5;
  std::string out;
};

int RunInfer(const InferArgs& a) {
  const auto method = ParseMethods(a.method).front();
  RequireDataset(a.data);
  const DatasetBundle data = ReadBundle(a.data, ModelOrient(a.models));
  if (a.scene >= data.scenes.size()) {
    throw ConfigError("scene " + std::to_string(a.scene) + " out of range");
  }
  const LoadedModels models = LoadModels(a.models, data.vocab);
  const auto tokens = Tokenize(SplitWords(a.command), data.vocab);
  const Image& image = data.scenes[a.scene].image;
  const MethodOutput r = RunMethod(method, image, tokens, models.view(), 1);
  if (r.detections.empty()) std::printf("no grasp\n");
  for (std::size_t i = 0; i < r.detections.size() && static_cast<int>(i) < a.top_k; ++i) {
    const auto& d = r.detections[i];
    std::printf("%zu\tscore %.4f\tx %.2f\ty %.2f\ttheta %.4f\tw %.2f\th %.2f\n", i + 1,
                d.score, d.grasp.x, d.grasp.y, d.grasp.theta, d.grasp.w, d.grasp.h);
  }
  if (!a.out.empty()) {
    const std::string out = OutPath(a.out);
    WritePpm(RenderDetections(image, r.detections, a.top_k, r.region), out);
    std::printf("wrote %s\n", out.c_str());
  }
  return 0;
}

// ---------------------------------------------------------------- render

struct RenderArgs {
  std::string data;
  ModelArgs models;
  std::string method;
  std::string split = "test";
  std::string out;
  int top_k = 1;
  int limit = 20;
};

int RunRender(const RenderArgs& a) {
  RequireDataset(a.data);
  const DatasetBundle data = ReadBundle(a.data, ModelOrient(a.models));
  const LoadedModels models = LoadModels(a.models, data.vocab);
  const std::string method = a.method.empty() ? "" : ParseMethods(a.method).front();
  const std::string out = OutPath(a.out);
  fs::create_directories(out);
  std::FILE* index = std::fopen((fs::path(out) / "index.tsv").string().c_str(), "w");
  if (!index) throw FormatError("cannot write into " + out);
  std::fprintf(index, "file\tsample\tscene\tcommand\n");
  int written = 0;
  for (std::size_t i : data.SampleIndices(a.split)) {
    if (written >= a.limit) break;
    const Sample& s = data.samples[i];
    const Image& image = data.scenes[s.scene_index].image;
    MethodOutput r;
    if (method.empty()) {
      // Ground truth: the commanded object's grasps.
      for (const auto& g : s.grasp_labels) {
        if (!g.label.is_orientation()) continue;
        Detection d;
        d.grasp = g.grasp;
        d.cls = g.label;
        r.detections.push_back(d);
      }
    } else {
      r = RunMethod(method, image, s.tokens, models.view(), 1);
    }
    char name[64];
    std::snprintf(name, sizeof(name), "sample_%06zu.ppm", i);
    WritePpm(RenderDetections(image, r.detections, a.top_k, r.region),
             (fs::path(out) / name).string());
    std::fprintf(index, "%s\t%zu\t%zu\t%s\n", name, i, s.scene_index,
                 JoinWords(s.words).c_str());
    ++written;
  }
  std::fclose(index);
  std::printf("wrote %d images to %s\n", written, out.c_str());
  return 0;
}

void AddModelFlags(CLI::App* cmd, ModelArgs& m) {
  cmd->add_option("--cgnet", m.cgnet, "CGNet checkpoint");
  cmd->add_option("--agnostic", m.agnostic, "Task-agnostic checkpoint");
  cmd->add_option("--retrieval", m.retrieval, "Retrieval checkpoint");
}

int Fail(const char* category, const std::string& what, int code) {
  std::fprintf(stderr, "error [%s]: %s\n", category, what.c_str());
  return code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Command-conditioned grasp detection"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);

  GenerateArgs gen;
  auto* g = app.add_subcommand("generate", "Generate a scene/command dataset");
  g->add_option("--config", gen.config, "Generation config")->required();
  g->add_option("--out", gen.out, "Output dataset directory")->required();
  g->add_option("--seed", gen.seed, "Override the config seed");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a model");
  t->add_option("--data", tr.data, "Dataset directory")->required();
  t->add_option("--config", tr.config, "Training config");
  t->add_option("--model-config", tr.model_config, "Model config (default: toy)");
  t->add_option("--out", tr.out, "Output directory")->required();
  t->add_option("--variant", tr.variant, "cgnet | agnostic | retrieval");
  t->add_option("--resume", tr.resume, "Continue from a checkpoint");
  t->add_option("--seed", tr.seed, "Override the sampling seed");
  t->add_option("--iterations", tr.iterations, "Override the iteration count");
  t->add_option("--init-seed", tr.init_seed, "Weight initialisation seed");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Evaluate methods on a split");
  e->add_option("--data", ev.data, "Dataset directory")->required();
  AddModelFlags(e, ev.models);
  e->add_option("--methods", ev.methods, "Comma-separated: cgnet,agn_rnd,ret_gr,cg_ret");
  e->add_option("--split", ev.split, "train | test");
  e->add_option("--out", ev.out, "Report directory");
  e->add_flag("--nt", ev.no_target, "Include no-target samples and report NT rejection");
  e->add_option("--fps-samples", ev.fps_samples, "Samples timed for throughput (0: off)");
  e->add_option("--seed", ev.seed, "Seed for random baselines");

  InferArgs in;
  auto* i = app.add_subcommand("infer", "Detect grasps for one command");
  i->add_option("--data", in.data, "Dataset directory")->required();
  AddModelFlags(i, in.models);
  i->add_option("--method", in.method, "Method name");
  i->add_option("--scene", in.scene, "Scene index")->required();
  i->add_option("--command", in.command, "Command text")->required();
  i->add_option("--top-k", in.top_k, "Detections to print and draw");
  i->add_option("--out", in.out, "Annotated PPM output");

  RenderArgs rd;
  auto* r = app.add_subcommand("render", "Draw detections or ground truth");
  r->add_option("--data", rd.data, "Dataset directory")->required();
  AddModelFlags(r, rd.models);
  r->add_option("--method", rd.method, "Method name (default: ground truth)");
  r->add_option("--split", rd.split, "train | test");
  r->add_option("--out", rd.out, "Output directory")->required();
  r->add_option("--top-k", rd.top_k, "Rectangles per image");
  r->add_option("--limit", rd.limit, "Maximum number of images");

  CLI11_PARSE(app, argc, argv);
  try {
    if (g->parsed()) return RunGenerate(gen);
    if (t->parsed()) return RunTrain(tr);
    if (e->parsed()) return RunEval(ev);
    if (i->parsed()) return RunInfer(in);
    if (r->parsed()) return RunRender(rd);
  } catch (const ConfigError& ex) {
    return Fail("config", ex.what(), 2);
  } catch (const FormatError& ex) {
    return Fail("io", ex.what(), 3);
  } catch (const EvalError& ex) {
    return Fail("eval", ex.what(), 4);
  } catch (const TrainingError& ex) {
    return Fail("training", ex.what(), 5);
  } catch (const std::exception& ex) {
    return Fail("error", ex.what(), 1);
  }
  return 1;
}
