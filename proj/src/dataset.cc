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

#include "cgnet/dataset.h"

#include <filesystem>
#include <nlohmann/json.hpp>
#include <sstream>

#include "cgnet/binary_io.h"
#include "cgnet/training.h"

namespace cgnet {

namespace fs = std::filesystem;

namespace {

std::string Resolve(const std::string& base_dir, const std::string& file) {
  if (file.empty()) return file;
  const fs::path p(file);
  return p.is_absolute() ? file : (fs::path(base_dir) / p).lexically_normal().string();
}

const char* SplitName(bool is_test) { return is_test ? "test" : "train"; }

}  // namespace

void GenerateConfig::Validate() const {
  scene.Validate();
  if (num_scenes < 2) throw ConfigError("num_scenes must be >= 2");
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw ConfigError("train_fraction must be in (0, 1)");
  }
  if (!(no_target_ratio >= 0.0 && no_target_ratio < 1.0)) {
    throw ConfigError("no_target_ratio must be in [0, 1)");
  }
  if (paraphrase_rounds < 0 || paraphrase_per_round < 0) {
    throw ConfigError("paraphrase counts must be >= 0");
  }
  if (templates_file.empty()) throw ConfigError("templates_file is required");
}

GenerateConfig GenerateConfig::FromKeyValues(KeyValueConfig& kv,
                                             const std::string& base_dir) {
  GenerateConfig c;
  c.scene = SceneConfig::FromKeyValues(kv);
  c.num_scenes = static_cast<int>(kv.GetInt("num_scenes", c.num_scenes));
  c.train_fraction = kv.GetDouble("train_fraction", c.train_fraction);
  c.no_target_ratio = kv.GetDouble("no_target_ratio", c.no_target_ratio);
  c.paraphrase_rounds = static_cast<int>(kv.GetInt("paraphrase_rounds", c.paraphrase_rounds));
  c.paraphrase_per_round =
      static_cast<int>(kv.GetInt("paraphrase_per_round", c.paraphrase_per_round));
  c.seed = kv.GetUint64("seed", c.seed);
  c.templates_file = Resolve(base_dir, kv.GetString("templates_file", ""));
  c.grammar_file = Resolve(base_dir, kv.GetString("grammar_file", ""));
  c.Validate();
  return c;
}

void GenerateConfig::ToKeyValues(std::map<std::string, std::string>& out) const {
  scene.ToKeyValues(out);
  out["num_scenes"] = std::to_string(num_scenes);
  out["train_fraction"] = FormatDouble(train_fraction);
  out["no_target_ratio"] = FormatDouble(no_target_ratio);
  out["paraphrase_rounds"] = std::to_string(paraphrase_rounds);
  out["paraphrase_per_round"] = std::to_string(paraphrase_per_round);
  out["seed"] = std::to_string(seed);
  out["templates_file"] = fs::path(templates_file).filename().string();
  if (!grammar_file.empty()) out["grammar_file"] = fs::path(grammar_file).filename().string();
}

std::vector<std::size_t> DatasetBundle::SampleIndices(const std::string& split,
                                                      bool include_no_target) const {
  if (split != "train" && split != "test") {
    throw ConfigError("unknown split '" + split + "' (expected train or test)");
  }
  const bool want_test = split == "test";
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (scene_is_test[samples[i].scene_index] != want_test) continue;
    if (!include_no_target && !samples[i].has_target()) continue;
    out.push_back(i);
  }
  return out;
}

std::size_t DatasetBundle::CountNoTarget() const {
  std::size_t n = 0;
  for (const auto& s : samples) n += !s.has_target();
  return n;
}

DatasetBundle GenerateBundle(const GenerateConfig& config) {
  config.Validate();
  DatasetBundle b;
  std::map<std::string, std::string> kv;
  config.ToKeyValues(kv);
  b.config_text = ToCanonicalText(kv);

  const auto base = LoadTemplates(config.templates_file);
  const ParaphraseGrammar grammar = config.grammar_file.empty()
                                        ? ParaphraseGrammar{}
                                        : ParaphraseGrammar::Load(config.grammar_file);
  ExpansionResult expanded =
      ExpandTemplates(base, grammar, config.paraphrase_rounds,
                      config.paraphrase_per_round, MixSeed(config.seed, 7));
  b.templates = std::move(expanded.templates);
  b.rejected_paraphrases = expanded.rejected;
  b.vocab = Vocabulary::Build(b.templates, config.scene.num_categories);

  b.scenes.reserve(config.num_scenes);
  for (int i = 0; i < config.num_scenes; ++i) {
    b.scenes.push_back(GenerateScene(config.scene, MixSeed(config.seed, 1000 + i)));
  }
  const double frac = config.train_fraction;
  const DatasetSplit split = SplitDataset(b.scenes.size(), frac, MixSeed(config.seed, 8));
  b.scene_is_test.assign(b.scenes.size(), false);
  for (std::size_t i : split.test) b.scene_is_test[i] = true;

  SampleBuildResult built =
      BuildSamples(b.scenes, b.templates, b.vocab, config.no_target_ratio,
                   MixSeed(config.seed, 9), config.scene.num_categories);
  b.samples = std::move(built.samples);
  b.skipped_no_target = built.skipped_no_target;
  return b;
}

void WriteBundle(const DatasetBundle& b, const std::string& dir) {
  fs::create_directories(dir);
  const fs::path root(dir);
  SerializeDataset(b.scenes, b.config_text, (root / "scenes.cgds").string());
  SaveTemplates(b.templates, (root / "templates.txt").string());
  b.vocab.Save((root / "vocab.txt").string());
  std::ostringstream tsv;
  tsv << "split\tscene\ttarget\tcommand\n";
  for (const Sample& s : b.samples) {
    tsv << SplitName(b.scene_is_test[s.scene_index]) << '\t' << s.scene_index << '\t'
        << (s.has_target() ? CategoryRegistry()[s.target_category].name : "NONE") << '\t'
        << JoinWords(s.words) << '\n';
  }
  WriteWholeFile((root / "samples.tsv").string(), tsv.str());

  std::size_t test_scenes = 0;
  for (bool t : b.scene_is_test) test_scenes += t;
  nlohmann::ordered_json m;
  m["tool_version"] = kToolVersion;
  m["kind"] = "dataset";
  m["config_hash"] = HexHash(b.config_text);
  m["config"] = b.config_text;
  m["counts"] = {{"scenes", b.scenes.size()},
                 {"train_scenes", b.scenes.size() - test_scenes},
                 {"test_scenes", test_scenes},
                 {"samples", b.samples.size()},
                 {"have_target", b.samples.size() - b.CountNoTarget()},
                 {"no_target", b.CountNoTarget()},
                 {"templates", b.templates.size()},
                 {"vocabulary", b.vocab.size()},
                 {"rejected_paraphrases", b.rejected_paraphrases},
                 {"skipped_no_target", b.skipped_no_target}};
  nlohmann::ordered_json files;
  for (const char* f : {"scenes.cgds", "samples.tsv", "templates.txt", "vocab.txt"}) {
    files[f] = HexHash(ReadWholeFile((root / f).string()));
  }
  m["files"] = files;
  WriteWholeFile((root / "manifest.json").string(), m.dump(2) + "\n");
}

DatasetBundle ReadBundle(const std::string& dir, int n_orient) {
  const fs::path root(dir);
  if (!fs::is_directory(root)) throw FormatError("dataset directory '" + dir + "' not found");
  DatasetBundle b;
  SceneFile sf = LoadDataset((root / "scenes.cgds").string());
  b.config_text = std::move(sf.config_text);
  b.scenes = std::move(sf.scenes);
  b.templates = LoadTemplates((root / "templates.txt").string());
  b.vocab = Vocabulary::Load((root / "vocab.txt").string());
  b.scene_is_test.assign(b.scenes.size(), false);
  std::istringstream in(ReadWholeFile((root / "samples.tsv").string()));
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    if (++line_no == 1 || line.empty()) continue;
    auto fail = [&](const std::string& why) {
      throw FormatError("samples.tsv line " + std::to_string(line_no) + ": " + why);
    };
    std::vector<std::string> f;
    std::stringstream ss(line);
    std::string field;
    while (std::getline(ss, field, '\t')) f.push_back(field);
    if (f.size() != 4) fail("expected 4 tab-separated fields");
    if (f[0] != "train" && f[0] != "test") fail("bad split '" + f[0] + "'");
    std::size_t scene = 0;
    try {
      scene = std::stoul(f[1]);
    } catch (const std::exception&) {
      fail("bad scene index");
    }
    if (scene >= b.scenes.size()) fail("scene index out of range");
    b.scene_is_test[scene] = f[0] == "test";
    Sample s;
    s.scene_index = scene;
    s.target_category = f[2] == "NONE" ? kNoTarget : FindCategory(f[2]);
    if (f[2] != "NONE" && s.target_category < 0) fail("unknown category '" + f[2] + "'");
    s.words = SplitWords(f[3]);
    s.tokens = Tokenize(s.words, b.vocab);
    s.grasp_labels = LabelGrasps(b.scenes[scene], s.target_category, n_orient);
    b.samples.push_back(std::move(s));
  }
  return b;
}

}  // namespace cgnet
