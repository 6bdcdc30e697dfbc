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

#include <gtest/gtest.h>

#include <filesystem>

#include "cgnet/binary_io.h"

namespace cgnet {
namespace {

namespace fs = std::filesystem;
const std::string kAssets = CGNET_ASSET_DIR;

GenerateConfig Small(int scenes = 12) {
  GenerateConfig gc;
  gc.num_scenes = scenes;
  gc.templates_file = kAssets + "/templates.txt";
  gc.grammar_file = kAssets + "/paraphrase_grammar.txt";
  gc.seed = 5;
  return gc;
}

fs::path TempDir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("cgnet_dataset_test_" + name);
  fs::remove_all(p);
  return p;
}

TEST(DatasetTest, SameSeedWritesByteIdenticalFiles) {
  const auto a = TempDir("a"), b = TempDir("b");
  WriteBundle(GenerateBundle(Small()), a.string());
  WriteBundle(GenerateBundle(Small()), b.string());
  for (const char* f : {"scenes.cgds", "samples.tsv", "templates.txt", "vocab.txt",
                        "manifest.json"}) {
    EXPECT_EQ(ReadWholeFile((a / f).string()), ReadWholeFile((b / f).string())) << f;
  }
  GenerateConfig other = Small();
  other.seed = 6;
  const auto c = TempDir("c");
  WriteBundle(GenerateBundle(other), c.string());
  EXPECT_NE(ReadWholeFile((a / "scenes.cgds").string()),
            ReadWholeFile((c / "scenes.cgds").string()));
  fs::remove_all(a);
  fs::remove_all(b);
  fs::remove_all(c);
}

TEST(DatasetTest, ReadBackMatchesGenerated) {
  const DatasetBundle g = GenerateBundle(Small());
  const auto dir = TempDir("round");
  WriteBundle(g, dir.string());
  const DatasetBundle r = ReadBundle(dir.string());
  EXPECT_EQ(r.config_text, g.config_text);
  EXPECT_EQ(r.scenes, g.scenes);
  EXPECT_EQ(r.templates, g.templates);
  EXPECT_EQ(r.vocab.words(), g.vocab.words());
  EXPECT_EQ(r.scene_is_test, g.scene_is_test);
  ASSERT_EQ(r.samples.size(), g.samples.size());
  for (std::size_t i = 0; i < g.samples.size(); ++i) {
    EXPECT_EQ(r.samples[i].scene_index, g.samples[i].scene_index);
    EXPECT_EQ(r.samples[i].target_category, g.samples[i].target_category);
    EXPECT_EQ(r.samples[i].tokens, g.samples[i].tokens);
    EXPECT_EQ(r.samples[i].grasp_labels.size(), g.samples[i].grasp_labels.size());
  }
  fs::remove_all(dir);
}

TEST(DatasetTest, CompositionAndSplit) {
  const DatasetBundle b = GenerateBundle(Small(200));
  const double frac = static_cast<double>(b.CountNoTarget()) / b.samples.size();
  EXPECT_NEAR(frac, 0.254, 0.01);
  std::size_t test_scenes = 0;
  for (bool t : b.scene_is_test) test_scenes += t;
  EXPECT_EQ(test_scenes, 20u);
  const auto train = b.SampleIndices("train"), test = b.SampleIndices("test");
  EXPECT_EQ(train.size() + test.size(), b.samples.size());
  for (std::size_t i : test) EXPECT_TRUE(b.scene_is_test[b.samples[i].scene_index]);
  for (std::size_t i : b.SampleIndices("test", false)) EXPECT_TRUE(b.samples[i].has_target());
  EXPECT_THROW(b.SampleIndices("validation"), ConfigError);
}

TEST(DatasetTest, FullSizeSplitProportions) {
  const DatasetSplit s = SplitDataset(4683, 4233.0 / 4683.0, 1);
  EXPECT_EQ(s.train.size(), 4233u);
  EXPECT_EQ(s.test.size(), 450u);
}

TEST(DatasetTest, ConfigResolvesRelativePathsAndRejectsUnknownKeys) {
  KeyValueConfig kv = KeyValueConfig::Parse(
      "num_scenes = 10\ntemplates_file = templates.txt\nseed = 9\n");
  const GenerateConfig gc = GenerateConfig::FromKeyValues(kv, kAssets);
  EXPECT_EQ(fs::path(gc.templates_file), fs::path(kAssets) / "templates.txt");
  EXPECT_EQ(gc.seed, 9u);
  EXPECT_NO_THROW(kv.RejectUnknownKeys());

  KeyValueConfig bad = KeyValueConfig::Parse("templates_file = t.txt\nnum_scenez = 3\n");
  GenerateConfig::FromKeyValues(bad, kAssets);
  try {
    bad.RejectUnknownKeys();
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("num_scenez"), std::string::npos);
  }
  KeyValueConfig none = KeyValueConfig::Parse("num_scenes = 4\n");
  EXPECT_THROW(GenerateConfig::FromKeyValues(none, kAssets), ConfigError);
}

TEST(DatasetTest, MalformedOrMissingInputsFail) {
  EXPECT_THROW(ReadBundle("/nonexistent/cgnet"), FormatError);
  const auto dir = TempDir("bad");
  WriteBundle(GenerateBundle(Small(4)), dir.string());
  WriteWholeFile((dir / "samples.tsv").string(),
                 "split\tscene\ttarget\tcommand\ntrain\t99\tbanana\tget the banana\n");
  EXPECT_THROW(ReadBundle(dir.string()), FormatError);
  WriteWholeFile((dir / "samples.tsv").string(),
                 "split\tscene\ttarget\tcommand\ntrain\t0\tunicorn\tget the unicorn\n");
  EXPECT_THROW(ReadBundle(dir.string()), FormatError);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace cgnet
