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

#ifndef CGNET_KV_CONFIG_H_
#define CGNET_KV_CONFIG_H_

#include <cstdint>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

namespace cgnet {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// `key = value` lines; '#' starts a comment. Readers mark keys as consumed so
// that typos surface as errors naming the offending key.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;
  static KeyValueConfig Parse(const std::string& text);
  static KeyValueConfig Load(const std::string& path);

  bool Has(const std::string& key) const { return values_.count(key) > 0; }
  void Set(const std::string& key, const std::string& value);

  std::string GetString(const std::string& key, const std::string& fallback);
  double GetDouble(const std::string& key, double fallback);
  long long GetInt(const std::string& key, long long fallback);
  std::uint64_t GetUint64(const std::string& key, std::uint64_t fallback);
  std::vector<double> GetDoubleList(const std::string& key,
                                    const std::vector<double>& fallback);

  // Throws ConfigError naming the first key no reader asked for.
  void RejectUnknownKeys() const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
  std::set<std::string> consumed_;
};

// Canonical `key = value` serialization (sorted keys), used for hashing.
std::string ToCanonicalText(const std::map<std::string, std::string>& kv);

std::string FormatDouble(double v);

}  // namespace cgnet

#endif  // CGNET_KV_CONFIG_H_
