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

// Command templates, paraphrase expansion, vocabulary and the
// (scene, command, labelled grasps) samples used for training.

#ifndef CGNET_COMMAND_H_
#define CGNET_COMMAND_H_

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cgnet/geometry.h"
#include "cgnet/scene.h"

namespace cgnet {

inline constexpr std::string_view kObjSlot = "<obj>";
inline constexpr std::string_view kUnkToken = "<unk>";

class CommandError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Lower-cases and strips punctuation. The object slot marker is kept as is.
std::string NormalizeWord(std::string_view word);
std::vector<std::string> SplitWords(std::string_view text);
std::string JoinWords(const std::vector<std::string>& words);

struct CommandTemplate {
  std::vector<std::string> tokens;

  static CommandTemplate Parse(std::string_view line);
  int SlotCount() const;
  std::string ToString() const { return JoinWords(tokens); }
  // Case-folded form used for de-duplication.
  std::string Key() const;

  friend bool operator==(const CommandTemplate&,
                         const CommandTemplate&) = default;
};

// One template per line, `<obj>` marks the slot, '#' starts a comment.
std::vector<CommandTemplate> ParseTemplates(const std::string& text);
std::vector<CommandTemplate> LoadTemplates(const std::string& path);
void SaveTemplates(const std::vector<CommandTemplate>& templates,
                   const std::string& path);

// Deterministic stand-in for an automatic paraphraser. Grammar text, one rule
// per line:
//   syn: pass | give | hand | bring      interchangeable phrases
//   reorder: $v me the <obj> => $v the <obj> to me
//   prefix: please                       prepend a phrase
//   suffix: for me                       append a phrase
// `$name` binds a single word in a reorder pattern.
struct ParaphraseRule {
  enum class Kind { kSynonyms, kReorder, kPrefix, kSuffix };
  Kind kind = Kind::kSynonyms;
  std::vector<std::vector<std::string>> phrases;  // synonym sets
  std::vector<std::string> pattern;               // reorder lhs / affix
  std::vector<std::string> replacement;           // reorder rhs

  // Rewrites `tokens`; returns false when the rule does not apply.
  bool Apply(std::vector<std::string>& tokens, std::uint64_t choice) const;
};

struct ParaphraseGrammar {
  std::vector<ParaphraseRule> rules;
  static ParaphraseGrammar Parse(const std::string& text);
  static ParaphraseGrammar Load(const std::string& path);
};

struct ExpansionResult {
  std::vector<CommandTemplate> templates;
  int rejected = 0;  // paraphrases with zero or several slots
};

// Each round paraphrases `per_round` templates drawn from the base set (one
// rewrite each) and keeps the outputs that are new and well formed.
ExpansionResult ExpandTemplates(const std::vector<CommandTemplate>& base,
                                const ParaphraseGrammar& grammar, int rounds,
                                int per_round = 35, std::uint64_t seed = 0);

std::vector<std::string> InstantiateCommand(const CommandTemplate& tmpl,
                                            int category);

// Dictionary of known words. Index 0 is always `<unk>`.
class Vocabulary {
 public:
  Vocabulary() : words_{std::string(kUnkToken)} {
    index_[words_[0]] = 0;
  }
  static Vocabulary Build(const std::vector<CommandTemplate>& templates,
                          int num_categories);
  static Vocabulary FromWords(const std::vector<std::string>& words);
  static Vocabulary Load(const std::string& path);
  void Save(const std::string& path) const;

  int unk() const { return 0; }
  int size() const { return static_cast<int>(words_.size()); }
  int Lookup(const std::string& normalized) const;
  bool Contains(const std::string& normalized) const {
    return index_.count(normalized) > 0;
  }
  const std::vector<std::string>& words() const { return words_; }

 private:
  std::vector<std::string> words_;
  std::map<std::string, int> index_;
};

std::vector<int> Tokenize(const std::vector<std::string>& words,
                          const Vocabulary& vocab);

struct GraspLabel {
  Grasp5D grasp;
  OrientationClass label = OrientationClass::NotTarget();
  int object = -1;
};

inline constexpr int kNoTarget = -1;

struct Sample {
  std::size_t scene_index = 0;
  std::vector<std::string> words;
  std::vector<int> tokens;
  int target_category = kNoTarget;
  std::vector<GraspLabel> grasp_labels;

  bool has_target() const { return target_category != kNoTarget; }
};

// Target-object grasps get their orientation bin; every other grasp is NT.
std::vector<GraspLabel> LabelGrasps(const Scene& scene, int target_category,
                                    int n_orient);

struct SampleBuildResult {
  std::vector<Sample> samples;
  int skipped_no_target = 0;  // scenes with no absent category to name
};

// One have-target sample per object plus enough no-target samples (naming a
// category absent from the scene) to reach `no_target_ratio` overall.
SampleBuildResult BuildSamples(const std::vector<Scene>& scenes,
                               const std::vector<CommandTemplate>& templates,
                               const Vocabulary& vocab, double no_target_ratio,
                               std::uint64_t seed, int num_categories,
                               int n_orient = 19);

}  // namespace cgnet

#endif  // CGNET_COMMAND_H_
