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

// Checkpoint container: model config (with hash), training config, vocabulary,
// named parameter arrays, optimizer moments and the iteration counter.
//
// Layout (little endian): "CGCK", u32 version, string model-config text,
// string model-config hash, string train-config text, string manifest,
// u64 vocabulary size + strings, i64 iteration, i64 Adam step, then three
// array groups (params, Adam m, Adam v) each as u64 count + per array
// {string name, u32 rows, u32 cols, f32 data column major}; trailing CRC32.

#ifndef CGNET_CHECKPOINT_H_
#define CGNET_CHECKPOINT_H_

#include <cstdint>
#include <string>
#include <vector>

#include "cgnet/model.h"
#include "cgnet/nn.h"
#include "cgnet/training.h"

namespace cgnet {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelConfig model;
  std::string train_config_text;
  std::string manifest;  // JSON describing the inputs that produced it
  std::vector<std::string> vocabulary;
  nn::ParamSet<float> params;
  AdamState adam;
  std::int64_t iteration = 0;
};

void SaveCheckpoint(const Checkpoint& ckpt, const std::string& path);
// Validates the checksum, the version, the stored config hash and that the
// parameter layout matches the config.
Checkpoint LoadCheckpoint(const std::string& path);

}  // namespace cgnet

#endif  // CGNET_CHECKPOINT_H_
