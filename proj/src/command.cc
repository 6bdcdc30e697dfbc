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

#include "cgnet/command.h"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

#include "cgnet/binary_io.h"

namespace cgnet {

namespace {

std::string Lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool SameWord(const std::string& a, const std::string& b) {
  return Lower(a) == Lower(b);
}

std::string Trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool MatchAt(const std::vector<std::string>& tokens, std::size_t at,
             const std::vector<std::string>& phrase) {
  if (at + phrase.size() > tokens.size()) return false;
  for (std::size_t k = 0; k < phrase.size(); ++k) {
    if (!SameWord(tokens[at + k], phrase[k])) return false;
  }
  return true;
}

bool ContainsPhrase(const std::vector<std::string>& tokens,
                    const std::vector<std::string>& phrase) {
  for (std::size_t at = 0; at < tokens.size(); ++at) {
    if (MatchAt(tokens, at, phrase)) return true;
  }
  return false;
}

std::vector<std::string> Splice(const std::vector<std::string>& tokens,
                                std::size_t at, std::size_t len,
                                const std::vector<std::string>& insert) {
  std::vector<std::string> out(tokens.begin(), tokens.begin() + at);
  out.insert(out.end(), insert.begin(), insert.end());
  out.insert(out.end(), tokens.begin() + at + len, tokens.end());
  return out;
}

}  // namespace

std::string NormalizeWord(std::string_view word) {
  if (word == kObjSlot) return std::string(kObjSlot);
  std::string out;
  for (char c : word) {
    const auto u = static_cast<unsigned char>(c);
    if (std::ispunct(u) && c != '\'') continue;
    out.push_back(static_cast<char>(std::tolower(u)));
  }
  return out;
}

std::vector<std::string> SplitWords(std::string_view text) {
  std::vector<std::string> words;
  std::istringstream in{std::string(text)};
  std::string w;
  while (in >> w) words.push_back(w);
  return words;
}

std::string JoinWords(const std::vector<std::string>& words) {
  std::string out;
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (i) out += ' ';
    out += words[i];
  }
  return out;
}

CommandTemplate CommandTemplate::Parse(std::string_view line) {
  CommandTemplate t;
  t.tokens = SplitWords(line);
  return t;
}

int CommandTemplate::SlotCount() const {
  return static_cast<int>(std::count(tokens.begin(), tokens.end(), kObjSlot));
}

std::string CommandTemplate::Key() const {
  std::vector<std::string> norm;
  for (const auto& t : tokens) norm.push_back(NormalizeWord(t));
  return JoinWords(norm);
}

std::vector<CommandTemplate> ParseTemplates(const std::string& text) {
  std::vector<CommandTemplate> out;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = Trim(line);
    if (line.empty()) continue;
    CommandTemplate t = CommandTemplate::Parse(line);
    if (t.SlotCount() != 1) {
      throw CommandError("template line " + std::to_string(line_no) +
                         " must contain exactly one " + std::string(kObjSlot));
    }
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<CommandTemplate> LoadTemplates(const std::string& path) {
  return ParseTemplates(ReadWholeFile(path));
}

void SaveTemplates(const std::vector<CommandTemplate>& templates,
                   const std::string& path) {
  std::string out = "# one template per line; <obj> marks the object slot\n";
  for (const auto& t : templates) out += t.ToString() + "\n";
  WriteWholeFile(path, out);
}

bool ParaphraseRule::Apply(std::vector<std::string>& tokens,
                           std::uint64_t choice) const {
  switch (kind) {
    case Kind::kSynonyms: {
      for (std::size_t at = 0; at < tokens.size(); ++at) {
        // Longest phrase first so that "pick up" wins over "pick".
        std::size_t best = phrases.size();
        for (std::size_t k = 0; k < phrases.size(); ++k) {
          if (MatchAt(tokens, at, phrases[k]) &&
              (best == phrases.size() ||
               phrases[k].size() > phrases[best].size())) {
            best = k;
          }
        }
        if (best == phrases.size()) continue;
        const std::size_t n = phrases.size();
        const std::size_t pick = (best + 1 + choice % (n - 1)) % n;
        tokens = Splice(tokens, at, phrases[best].size(), phrases[pick]);
        return true;
      }
      return false;
    }
    case Kind::kReorder: {
      for (std::size_t at = 0; at + pattern.size() <= tokens.size(); ++at) {
        std::map<std::string, std::string> bound;
        bool ok = true;
        for (std::size_t k = 0; k < pattern.size() && ok; ++k) {
          const std::string& p = pattern[k];
          const std::string& t = tokens[at + k];
          if (p.size() > 1 && p[0] == '$') {
            if (t == kObjSlot) {
              ok = false;
            } else if (bound.count(p)) {
              ok = SameWord(bound[p], t);
            } else {
              bound[p] = t;
            }
          } else {
            ok = SameWord(p, t);
          }
        }
        if (!ok) continue;
        std::vector<std::string> insert;
        for (const std::string& r : replacement) {
          insert.push_back(bound.count(r) ? bound[r] : r);
        }
        tokens = Splice(tokens, at, pattern.size(), insert);
        return true;
      }
      return false;
    }
    case Kind::kPrefix:
      if (ContainsPhrase(tokens, pattern)) return false;
      tokens.insert(tokens.begin(), pattern.begin(), pattern.end());
      return true;
    case Kind::kSuffix:
      if (ContainsPhrase(tokens, pattern)) return false;
      tokens.insert(tokens.end(), pattern.begin(), pattern.end());
      return true;
  }
  return false;
}

ParaphraseGrammar ParaphraseGrammar::Parse(const std::string& text) {
  ParaphraseGrammar g;
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = Trim(line);
    if (line.empty()) continue;
    const auto colon = line.find(':');
    auto fail = [&](const std::string& why) {
      throw CommandError("grammar line " + std::to_string(line_no) + ": " + why);
    };
    if (colon == std::string::npos) fail("expected '<kind>: ...'");
    const std::string kind = Trim(line.substr(0, colon));
    const std::string body = Trim(line.substr(colon + 1));
    ParaphraseRule rule;
    if (kind == "syn") {
      rule.kind = ParaphraseRule::Kind::kSynonyms;
      std::stringstream ss(body);
      std::string phrase;
      while (std::getline(ss, phrase, '|')) {
        auto words = SplitWords(phrase);
        if (words.empty()) fail("empty synonym phrase");
        rule.phrases.push_back(std::move(words));
      }
      if (rule.phrases.size() < 2) fail("synonym set needs two phrases");
    } else if (kind == "reorder") {
      const auto arrow = body.find("=>");
      if (arrow == std::string::npos) fail("reorder needs '=>'");
      rule.kind = ParaphraseRule::Kind::kReorder;
      rule.pattern = SplitWords(body.substr(0, arrow));
      rule.replacement = SplitWords(body.substr(arrow + 2));
      if (rule.pattern.empty()) fail("empty reorder pattern");
      for (const auto& r : rule.replacement) {
        if (r.size() > 1 && r[0] == '$' &&
            std::find(rule.pattern.begin(), rule.pattern.end(), r) ==
                rule.pattern.end()) {
          fail("unbound variable " + r);
        }
      }
    } else if (kind == "prefix" || kind == "suffix") {
      rule.kind = kind == "prefix" ? ParaphraseRule::Kind::kPrefix
                                   : ParaphraseRule::Kind::kSuffix;
      rule.pattern = SplitWords(body);
      if (rule.pattern.empty()) fail("empty affix");
    } else {
      fail("unknown rule kind '" + kind + "'");
    }
    g.rules.push_back(std::move(rule));
  }
  return g;
}

ParaphraseGrammar ParaphraseGrammar::Load(const std::string& path) {
  return Parse(ReadWholeFile(path));
}

ExpansionResult ExpandTemplates(const std::vector<CommandTemplate>& base,
                                const ParaphraseGrammar& grammar, int rounds,
                                int per_round, std::uint64_t seed) {
  if (base.empty()) throw CommandError("template expansion needs a base set");
  ExpansionResult result;
  std::set<std::string> seen;
  for (const auto& t : base) {
    if (t.SlotCount() != 1) {
      throw CommandError("base template '" + t.ToString() +
                         "' must contain exactly one slot");
    }
    if (seen.insert(t.Key()).second) result.templates.push_back(t);
  }
  if (grammar.rules.empty()) return result;
  // Every round paraphrases commands drawn from the initial set.
  const std::vector<CommandTemplate> sources = result.templates;
  std::mt19937_64 rng(seed);
  const std::size_t nrules = grammar.rules.size();
  for (int r = 0; r < rounds; ++r) {
    for (int j = 0; j < per_round; ++j) {
      const CommandTemplate& src = sources[rng() % sources.size()];
      const std::size_t start = rng() % nrules;
      const std::uint64_t choice = rng();
      std::vector<std::string> tokens;
      bool applied = false;
      for (std::size_t k = 0; k < nrules && !applied; ++k) {
        tokens = src.tokens;
        applied = grammar.rules[(start + k) % nrules].Apply(tokens, choice) &&
                  tokens != src.tokens;
      }
      if (!applied) continue;
      CommandTemplate out{tokens};
      if (out.SlotCount() != 1) {
        ++result.rejected;
        continue;
      }
      if (seen.insert(out.Key()).second) result.templates.push_back(out);
    }
  }
  return result;
}

std::vector<std::string> InstantiateCommand(const CommandTemplate& tmpl,
                                            int category) {
  if (tmpl.SlotCount() != 1) {
    throw CommandError("template '" + tmpl.ToString() +
                       "' must contain exactly one " + std::string(kObjSlot));
  }
  const auto& reg = CategoryRegistry();
  if (category < 0 || category >= static_cast<int>(reg.size())) {
    throw CommandError("unknown category " + std::to_string(category));
  }
  std::vector<std::string> out;
  for (const auto& t : tmpl.tokens) {
    if (t == kObjSlot) {
      for (auto& w : SplitWords(reg[category].name)) out.push_back(w);
    } else {
      out.push_back(t);
    }
  }
  return out;
}

Vocabulary Vocabulary::Build(const std::vector<CommandTemplate>& templates,
                             int num_categories) {
  std::set<std::string> words;
  for (const auto& t : templates) {
    for (const auto& tok : t.tokens) {
      if (tok == kObjSlot) continue;
      const std::string w = NormalizeWord(tok);
      if (!w.empty()) words.insert(w);
    }
  }
  for (int c = 0; c < num_categories; ++c) {
    for (const auto& w : SplitWords(CategoryRegistry()[c].name)) {
      words.insert(NormalizeWord(w));
    }
  }
  words.erase(std::string(kUnkToken));
  std::vector<std::string> list{std::string(kUnkToken)};
  list.insert(list.end(), words.begin(), words.end());
  return FromWords(list);
}

Vocabulary Vocabulary::FromWords(const std::vector<std::string>& words) {
  if (words.empty() || words[0] != kUnkToken) {
    throw CommandError("vocabulary must start with " + std::string(kUnkToken));
  }
  Vocabulary v;
  v.words_ = words;
  v.index_.clear();
  for (std::size_t i = 0; i < words.size(); ++i) {
    if (words[i].empty()) throw CommandError("empty vocabulary entry");
    if (!v.index_.emplace(words[i], static_cast<int>(i)).second) {
      throw CommandError("duplicate vocabulary word '" + words[i] + "'");
    }
  }
  return v;
}

Vocabulary Vocabulary::Load(const std::string& path) {
  std::istringstream in(ReadWholeFile(path));
  std::vector<std::string> words;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    words.push_back(line);
  }
  while (!words.empty() && words.back().empty()) words.pop_back();
  return FromWords(words);
}

void Vocabulary::Save(const std::string& path) const {
  std::string out;
  for (const auto& w : words_) out += w + "\n";
  WriteWholeFile(path, out);
}

int Vocabulary::Lookup(const std::string& normalized) const {
  auto it = index_.find(normalized);
  return it == index_.end() ? unk() : it->second;
}

std::vector<int> Tokenize(const std::vector<std::string>& words,
                          const Vocabulary& vocab) {
  if (words.empty()) throw CommandError("cannot tokenize an empty command");
  std::vector<int> out;
  out.reserve(words.size());
  for (const auto& w : words) out.push_back(vocab.Lookup(NormalizeWord(w)));
  return out;
}

std::vector<GraspLabel> LabelGrasps(const Scene& scene, int target_category,
                                    int n_orient) {
  std::vector<GraspLabel> labels;
  for (std::size_t i = 0; i < scene.objects.size(); ++i) {
    const SceneObject& o = scene.objects[i];
    const bool target = o.category == target_category;
    for (const Grasp5D& g : o.grasps) {
      GraspLabel l;
      l.grasp = g;
      l.object = static_cast<int>(i);
      l.label = target ? OrientationClass::Orientation(ThetaToClass(g.theta, n_orient))
                       : OrientationClass::NotTarget();
      labels.push_back(l);
    }
  }
  return labels;
}

SampleBuildResult BuildSamples(const std::vector<Scene>& scenes,
                               const std::vector<CommandTemplate>& templates,
                               const Vocabulary& vocab, double no_target_ratio,
                               std::uint64_t seed, int num_categories,
                               int n_orient) {
  if (!(no_target_ratio >= 0.0 && no_target_ratio < 1.0)) {
    throw CommandError("no_target_ratio must be in [0, 1)");
  }
  if (templates.empty()) throw CommandError("no command templates");
  std::mt19937_64 rng(seed);
  SampleBuildResult result;

  std::size_t have_target = 0;
  std::vector<std::vector<int>> absent(scenes.size());
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    have_target += scenes[s].objects.size();
    std::vector<bool> present(num_categories, false);
    for (const auto& o : scenes[s].objects) {
      if (o.category < num_categories) present[o.category] = true;
    }
    for (int c = 0; c < num_categories; ++c) {
      if (!present[c]) absent[s].push_back(c);
    }
  }
  const auto no_target = static_cast<std::size_t>(std::llround(
      no_target_ratio * static_cast<double>(have_target) / (1.0 - no_target_ratio)));

  // Spread no-target commands over scenes in a shuffled cyclic order.
  std::vector<std::size_t> quota(scenes.size(), 0);
  std::vector<std::size_t> order;
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    if (absent[s].empty()) {
      ++result.skipped_no_target;
    } else {
      order.push_back(s);
    }
  }
  std::shuffle(order.begin(), order.end(), rng);
  if (!order.empty()) {
    for (std::size_t k = 0; k < no_target; ++k) ++quota[order[k % order.size()]];
  }

  auto make = [&](std::size_t s, int named, int target) {
    Sample sample;
    sample.scene_index = s;
    sample.words = InstantiateCommand(templates[rng() % templates.size()], named);
    sample.tokens = Tokenize(sample.words, vocab);
    sample.target_category = target;
    sample.grasp_labels = LabelGrasps(scenes[s], target, n_orient);
    return sample;
  };
  for (std::size_t s = 0; s < scenes.size(); ++s) {
    for (const auto& o : scenes[s].objects) {
      result.samples.push_back(make(s, o.category, o.category));
    }
    for (std::size_t k = 0; k < quota[s]; ++k) {
      const int named = absent[s][rng() % absent[s].size()];
      result.samples.push_back(make(s, named, kNoTarget));
    }
  }
  return result;
}

}  // namespace cgnet
