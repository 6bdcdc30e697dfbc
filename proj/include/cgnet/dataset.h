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

// Dataset bundles: scenes, command templates, vocabulary and the
// (scene, command, labels) samples, stored as a directory:
//   scenes.cgds     scene container (see scene.h)
//   samples.tsv     split, scene index, target category or NONE, command
//   templates.txt   expanded template set
//   vocab.txt       one word per line, <unk> first
//   manifest.json   config hash, seeds, counts and file checksums

#ifndef CGNET_DATASET_H_
#define CGNET_DATASET_H_

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "cgnet/command.h"
#include "cgnet/kv_config.h"
#include "cgnet/scene.h"

namespace cgnet {

inline constexpr const char* kToolVersion = "1.0.0";

struct GenerateConfig {
  SceneConfig scene;
  int num_scenes = 600;
  double train_fraction = 0.9;
  double no_target_ratio = 0.254;
  int paraphrase_rounds = 10;
  int paraphrase_per_round = 35;
  std::uint64_t seed = 1;
  std::string templates_file;  // resolved paths
  std::string grammar_file;

  void Validate() const;
  // Relative file names are resolved against `base_dir`.
  static GenerateConfig FromKeyValues(KeyValueConfig& kv, const std::string& base_dir);
  void ToKeyValues(std::map<std::string, std::string>& out) const;
};

struct DatasetBundle {
  std::string config_text;
  std::vector<Scene> scenes;
  std::vector<CommandTemplate> templates;
  Vocabulary vocab;
  std::vector<Sample> samples;
  std::vector<bool> scene_is_test;
  int rejected_paraphrases = 0;
  int skipped_no_target = 0;

  // Sample indices belonging to scenes of the given split ("train"/"test").
  std::vector<std::size_t> SampleIndices(const std::string& split,
                                         bool include_no_target = true) const;
  std::size_t CountNoTarget() const;
};

DatasetBundle GenerateBundle(const GenerateConfig& config);
void WriteBundle(const DatasetBundle& bundle, const std::string& dir);
// Sample grasp labels use `n_orient` orientation bins.
DatasetBundle ReadBundle(const std::string& dir, int n_orient = 19);

}  // namespace cgnet

#endif  // CGNET_DATASET_H_
