// Copyright 2026 The TransDeno Authors
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
#pragma once

#include <cerrno>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "transdeno/error.hpp"

namespace transdeno::io {

/// Validation failure in a key=value file; the message carries
/// "source:line: ".
class ConfigError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Flat key=value configuration. Blank lines and '#' comments are ignored;
/// whitespace around keys and values is trimmed.
class KeyValueFile {
 public:
  static KeyValueFile parse(std::istream& in, std::string source) {
    KeyValueFile kv;
    kv.source_ = std::move(source);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
      ++lineno;
      if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
      line = trim(line);
      if (line.empty()) continue;
      const auto eq = line.find('=');
      if (eq == std::string::npos) kv.fail(lineno, "expected key=value, got '" + line + "'");
      const std::string key = trim(line.substr(0, eq));
      const std::string value = trim(line.substr(eq + 1));
      if (key.empty()) kv.fail(lineno, "empty key");
      if (kv.entries_.count(key)) kv.fail(lineno, "duplicate key '" + key + "'");
      kv.entries_[key] = {value, lineno};
    }
    return kv;
  }

  static KeyValueFile load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string() + ": cannot open");
    return parse(in, path.string());
  }

  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  std::string get_string(const std::string& key) const { return entry(key).value; }
  std::string get_string(const std::string& key, const std::string& fallback) const {
    return has(key) ? get_string(key) : fallback;
  }

  std::uint64_t get_u64(const std::string& key) const {
    const auto& e = entry(key);
    errno = 0;
    char* end = nullptr;
    const auto v = std::strtoull(e.value.c_str(), &end, 10);
    if (e.value.empty() || e.value[0] == '-' || *end != '\0' || errno == ERANGE) {
      fail(e.line, "'" + key + "' must be a nonnegative integer, got '" + e.value + "'");
    }
    return v;
  }
  std::uint64_t get_u64(const std::string& key, std::uint64_t fallback) const {
    return has(key) ? get_u64(key) : fallback;
  }

  std::size_t get_positive(const std::string& key) const {
    const auto v = get_u64(key);
    if (v == 0) fail(entry(key).line, "'" + key + "' must be positive");
    return static_cast<std::size_t>(v);
  }

  double get_double(const std::string& key) const {
    const auto& e = entry(key);
    errno = 0;
    char* end = nullptr;
    const double v = std::strtod(e.value.c_str(), &end);
    if (e.value.empty() || *end != '\0' || errno == ERANGE || !std::isfinite(v)) {
      fail(e.line, "'" + key + "' must be a finite number, got '" + e.value + "'");
    }
    return v;
  }
  double get_double(const std::string& key, double fallback) const { return has(key) ? get_double(key) : fallback; }

  /// Comma-separated list of positive integers.
  std::vector<std::size_t> get_list(const std::string& key) const {
    const auto& e = entry(key);
    std::vector<std::size_t> out;
    std::stringstream ss(e.value);
    std::string item;
    while (std::getline(ss, item, ',')) {
      item = trim(item);
      char* end = nullptr;
      const auto v = std::strtoull(item.c_str(), &end, 10);
      if (item.empty() || item[0] == '-' || *end != '\0' || v == 0) {
        fail(e.line, "'" + key + "' must be a comma-separated list of positive integers");
      }
      out.push_back(static_cast<std::size_t>(v));
    }
    if (out.empty()) fail(e.line, "'" + key + "' is empty");
    return out;
  }

  /// Rejects keys outside `allowed`, naming the first offender's line.
  void require_known(const std::set<std::string>& allowed) const {
    for (const auto& [key, e] : entries_) {
      if (!allowed.count(key)) fail(e.line, "unknown key '" + key + "'");
    }
  }

  void require(const std::vector<std::string>& keys) const {
    for (const auto& k : keys) {
      if (!has(k)) throw ConfigError(source_ + ": missing required key '" + k + "'");
    }
  }

  int line_of(const std::string& key) const { return entry(key).line; }
  [[noreturn]] void fail(int line, const std::string& msg) const {
    throw ConfigError(source_ + ":" + std::to_string(line) + ": " + msg);
  }

 private:
  struct Entry {
    std::string value;
    int line = 0;
  };

  const Entry& entry(const std::string& key) const {
    auto it = entries_.find(key);
    if (it == entries_.end()) throw ConfigError(source_ + ": missing required key '" + key + "'");
    return it->second;
  }

  static std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
  }

  std::string source_;
  std::map<std::string, Entry> entries_;
};

}  // namespace transdeno::io
