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

#include "timit/config_file.h"

#include <charconv>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace timit {
namespace {

std::string Trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r\n");
  return s.substr(begin, end - begin + 1);
}

double ParseDouble(const std::string& key, const std::string& token) {
  double value = 0.0;
  const char* first = token.data();
  const char* last = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc() || ptr != last) {
    throw ConfigError("config key '" + key + "': not a number: '" + token +
                      "'");
  }
  return value;
}

}  // namespace

KeyValueConfig KeyValueConfig::Parse(const std::string& text) {
  KeyValueConfig config;
  std::istringstream stream(text);
  std::string line;
  int line_number = 0;
  while (std::getline(stream, line)) {
    ++line_number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = Trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("config line " + std::to_string(line_number) +
                        ": expected 'key = value'");
    }
    const std::string key = Trim(line.substr(0, eq));
    if (key.empty()) {
      throw ConfigError("config line " + std::to_string(line_number) +
                        ": empty key");
    }
    if (config.Has(key)) {
      throw ConfigError("config key '" + key + "' given twice");
    }
    config.Set(key, Trim(line.substr(eq + 1)));
  }
  return config;
}

KeyValueConfig KeyValueConfig::Load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  std::stringstream buffer;
  buffer << in.rdbuf();
  return Parse(buffer.str());
}

bool KeyValueConfig::Has(const std::string& key) const {
  return values_.count(key) > 0;
}

std::string KeyValueConfig::GetString(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError("missing config key: " + key);
  return it->second;
}

std::string KeyValueConfig::GetString(const std::string& key,
                                      const std::string& fallback) const {
  return Has(key) ? GetString(key) : fallback;
}

double KeyValueConfig::GetDouble(const std::string& key) const {
  const auto values = GetVector(key);
  if (values.size() != 1) {
    throw ConfigError("config key '" + key + "': expected one number");
  }
  return values[0];
}

double KeyValueConfig::GetDouble(const std::string& key,
                                 double fallback) const {
  return Has(key) ? GetDouble(key) : fallback;
}

int KeyValueConfig::GetInt(const std::string& key) const {
  const std::string token = GetString(key);
  int value = 0;
  auto [ptr, ec] =
      std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc() || ptr != token.data() + token.size()) {
    throw ConfigError("config key '" + key + "': not an integer: '" + token +
                      "'");
  }
  return value;
}

int KeyValueConfig::GetInt(const std::string& key, int fallback) const {
  return Has(key) ? GetInt(key) : fallback;
}

std::vector<double> KeyValueConfig::GetVector(const std::string& key) const {
  std::istringstream tokens(GetString(key));
  std::vector<double> values;
  std::string token;
  while (tokens >> token) values.push_back(ParseDouble(key, token));
  return values;
}

void KeyValueConfig::Set(const std::string& key, const std::string& value) {
  if (!Has(key)) order_.push_back(key);
  values_[key] = value;
}

void KeyValueConfig::SetDouble(const std::string& key, double value) {
  Set(key, FormatDouble(value));
}

void KeyValueConfig::SetInt(const std::string& key, long long value) {
  Set(key, std::to_string(value));
}

void KeyValueConfig::SetVector(const std::string& key,
                               const std::vector<double>& values) {
  std::string joined;
  for (size_t i = 0; i < values.size(); ++i) {
    if (i > 0) joined += ' ';
    joined += FormatDouble(values[i]);
  }
  Set(key, joined);
}

std::string KeyValueConfig::ToString() const {
  std::string out;
  for (const auto& key : order_) {
    out += key + " = " + values_.at(key) + "\n";
  }
  return out;
}

void KeyValueConfig::Save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write config file: " + path);
  out << ToString();
}

std::string FormatDouble(double value) {
  char buffer[64];
  auto [ptr, ec] = std::to_chars(buffer, buffer + sizeof(buffer), value);
  if (ec != std::errc()) return "nan";
  return std::string(buffer, ptr);
}

std::uint64_t Fnv1a64(const std::string& bytes) {
  std::uint64_t hash = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    hash ^= c;
    hash *= 0x100000001b3ull;
  }
  return hash;
}

std::string HexDigest(std::uint64_t value) {
  char buffer[17];
  std::snprintf(buffer, sizeof(buffer), "%016llx",
                static_cast<unsigned long long>(value));
  return buffer;
}

}  // namespace timit
