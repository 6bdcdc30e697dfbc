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

#include "cgnet/checkpoint.h"

#include "cgnet/binary_io.h"

namespace cgnet {

namespace {

constexpr char kMagic[4] = {'C', 'G', 'C', 'K'};

void PutArrays(BinaryWriter& w, const nn::ParamSet<float>& set) {
  w.Put<std::uint64_t>(set.size());
  for (int i = 0; i < set.size(); ++i) {
    w.PutString(set.name(i));
    w.Put<std::uint32_t>(set[i].rows());
    w.Put<std::uint32_t>(set[i].cols());
    w.PutBytes(std::string_view(reinterpret_cast<const char*>(set[i].data()),
                                sizeof(float) * set[i].size()));
  }
}

nn::ParamSet<float> GetArrays(BinaryReader& r) {
  nn::ParamSet<float> set;
  const auto count = r.Get<std::uint64_t>();
  for (std::uint64_t i = 0; i < count; ++i) {
    const std::string name = r.GetString();
    const auto rows = r.Get<std::uint32_t>();
    const auto cols = r.Get<std::uint32_t>();
    const int idx = set.Add(name, static_cast<int>(rows), static_cast<int>(cols));
    const std::string bytes = r.GetBytes(sizeof(float) * rows * cols);
    std::memcpy(set[idx].data(), bytes.data(), bytes.size());
  }
  return set;
}

}  // namespace

void SaveCheckpoint(const Checkpoint& ckpt, const std::string& path) {
  BinaryWriter w;
  w.PutBytes(std::string_view(kMagic, 4));
  w.Put<std::uint32_t>(kCheckpointVersion);
  w.PutString(ckpt.model.CanonicalText());
  w.PutString(ckpt.model.Hash());
  w.PutString(ckpt.train_config_text);
  w.PutString(ckpt.manifest);
  w.Put<std::uint64_t>(ckpt.vocabulary.size());
  for (const auto& word : ckpt.vocabulary) w.PutString(word);
  w.Put<std::int64_t>(ckpt.iteration);
  w.Put<std::int64_t>(ckpt.adam.step);
  PutArrays(w, ckpt.params);
  const bool has_moments = ckpt.adam.m.size() > 0;
  PutArrays(w, has_moments ? ckpt.adam.m : nn::ParamSet<float>());
  PutArrays(w, has_moments ? ckpt.adam.v : nn::ParamSet<float>());
  w.WriteFileWithChecksum(path);
}

Checkpoint LoadCheckpoint(const std::string& path) {
  BinaryReader r = BinaryReader::FromChecksummedFile(path);
  if (r.GetBytes(4) != std::string_view(kMagic, 4)) {
    throw CorruptFileError(path + ": not a checkpoint");
  }
  const auto version = r.Get<std::uint32_t>();
  if (version != kCheckpointVersion) {
    throw VersionMismatchError(path + ": checkpoint version " + std::to_string(version) +
                               ", expected " + std::to_string(kCheckpointVersion));
  }
  Checkpoint ckpt;
  const std::string config_text = r.GetString();
  const std::string hash = r.GetString();
  if (HexHash(config_text) != hash) {
    throw CorruptFileError(path + ": model config hash mismatch");
  }
  KeyValueConfig kv = KeyValueConfig::Parse(config_text);
  ckpt.model = ModelConfig::FromKeyValues(kv);
  kv.RejectUnknownKeys();
  ckpt.train_config_text = r.GetString();
  ckpt.manifest = r.GetString();
  const auto vocab_size = r.Get<std::uint64_t>();
  for (std::uint64_t i = 0; i < vocab_size; ++i) ckpt.vocabulary.push_back(r.GetString());
  ckpt.iteration = r.Get<std::int64_t>();
  ckpt.adam.step = r.Get<std::int64_t>();
  ckpt.params = GetArrays(r);
  ckpt.adam.m = GetArrays(r);
  ckpt.adam.v = GetArrays(r);
  if (!r.AtEnd()) throw CorruptFileError(path + ": trailing bytes in checkpoint");
  // Layout check against a freshly built model of the stored config.
  const CgnetModel<float> probe(ckpt.model, 0);
  if (!probe.params().SameLayout(ckpt.params)) {
    throw FormatError(path + ": parameter arrays do not match the model config");
  }
  if (ckpt.adam.m.size() > 0 && (!probe.params().SameLayout(ckpt.adam.m) ||
                                 !probe.params().SameLayout(ckpt.adam.v))) {
    throw FormatError(path + ": optimizer state does not match the model config");
  }
  if (static_cast<int>(ckpt.vocabulary.size()) != ckpt.model.vocab_size) {
    throw FormatError(path + ": vocabulary size does not match the model config");
  }
  return ckpt;
}

}  // namespace cgnet
