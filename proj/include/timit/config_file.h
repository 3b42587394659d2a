// Copyright 2026 DeepMind Technologies Limited
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef TIMIT_CONFIG_FILE_H_
#define TIMIT_CONFIG_FILE_H_

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace timit {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Ordered key-value text configuration.
//
//   # comment
//   mass = 30.0
//   hip_offset_lf = 0.277 0.234 0.0
//
// Values are whitespace-separated lists of tokens; keys are unique.
class KeyValueConfig {
 public:
  static KeyValueConfig Parse(const std::string& text);
  static KeyValueConfig Load(const std::string& path);

  bool Has(const std::string& key) const;
  double GetDouble(const std::string& key) const;
  double GetDouble(const std::string& key, double fallback) const;
  int GetInt(const std::string& key) const;
  int GetInt(const std::string& key, int fallback) const;
  std::vector<double> GetVector(const std::string& key) const;
  std::string GetString(const std::string& key) const;
  std::string GetString(const std::string& key,
                        const std::string& fallback) const;

  void Set(const std::string& key, const std::string& value);
  void SetDouble(const std::string& key, double value);
  void SetInt(const std::string& key, long long value);
  void SetVector(const std::string& key, const std::vector<double>& values);

  // Canonical serialization: one "key = value" line per entry, in insertion
  // order. Doubles are written with round-trip precision.
  std::string ToString() const;
  void Save(const std::string& path) const;

  const std::vector<std::string>& keys() const { return order_; }

 private:
  std::map<std::string, std::string> values_;
  std::vector<std::string> order_;
};

// Shortest decimal representation that round-trips to the same double.
std::string FormatDouble(double value);

// 64-bit FNV-1a, used for config fingerprints in manifests.
std::uint64_t Fnv1a64(const std::string& bytes);
std::string HexDigest(std::uint64_t value);

}  // namespace timit

#endif  // TIMIT_CONFIG_FILE_H_
