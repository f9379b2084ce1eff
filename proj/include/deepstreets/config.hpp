// Copyright (c) 2026 The deepstreets Authors. All rights reserved.
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

#include <charconv>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "deepstreets/common.hpp"

namespace deepstreets {

/// Flat `key = value` text. Blank lines and `#` comments are ignored.
/// Keys may repeat (matrix specs list one `row` per line); scalar getters
/// reject repeated keys.
class KeyValueConfig {
 public:
  KeyValueConfig() = default;

  static KeyValueConfig parse(std::string_view text, std::string origin = "<string>") {
    KeyValueConfig cfg;
    cfg.origin_ = std::move(origin);
    std::size_t lineno = 0;
    for (const auto& raw : split_string(text, '\n')) {
      ++lineno;
      auto line = trim(raw);
      if (line.empty() || line.front() == '#') continue;
      auto eq = line.find('=');
      if (eq == std::string::npos)
        throw DataError(cfg.origin_ + ":" + std::to_string(lineno) + ": expected key=value");
      auto key = trim(std::string_view(line).substr(0, eq));
      auto value = trim(std::string_view(line).substr(eq + 1));
      if (key.empty())
        throw DataError(cfg.origin_ + ":" + std::to_string(lineno) + ": empty key");
      cfg.entries_.emplace_back(std::move(key), std::move(value));
    }
    return cfg;
  }

  static KeyValueConfig load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot read config file " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
  }

  const std::string& origin() const { return origin_; }
  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

  void set(const std::string& key, std::string value) {
    for (auto& [k, v] : entries_)
      if (k == key) {
        v = std::move(value);
        return;
      }
    entries_.emplace_back(key, std::move(value));
  }

  bool has(const std::string& key) const {
    for (const auto& [k, v] : entries_)
      if (k == key) return true;
    return false;
  }

  std::vector<std::string> all(const std::string& key) const {
    std::vector<std::string> out;
    for (const auto& [k, v] : entries_)
      if (k == key) out.push_back(v);
    return out;
  }

  /// Throws naming the first key outside `allowed`.
  void reject_unknown(const std::set<std::string>& allowed) const {
    for (const auto& [k, v] : entries_)
      if (!allowed.contains(k)) throw DataError(origin_ + ": unknown key '" + k + "'");
  }

  std::string get_string(const std::string& key) const {
    auto values = all(key);
    if (values.empty()) throw DataError(origin_ + ": missing required key '" + key + "'");
    if (values.size() > 1) throw DataError(origin_ + ": key '" + key + "' given more than once");
    return values.front();
  }

  std::string get_string(const std::string& key, const std::string& fallback) const {
    return has(key) ? get_string(key) : fallback;
  }

  long long get_int(const std::string& key) const { return to_int(key, get_string(key)); }
  long long get_int(const std::string& key, long long fallback) const {
    return has(key) ? get_int(key) : fallback;
  }

  double get_double(const std::string& key) const { return to_double(key, get_string(key)); }
  double get_double(const std::string& key, double fallback) const {
    return has(key) ? get_double(key) : fallback;
  }

  bool get_bool(const std::string& key, bool fallback) const {
    if (!has(key)) return fallback;
    auto v = get_string(key);
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw DataError(origin_ + ": key '" + key + "' expects a boolean, got '" + v + "'");
  }

  std::vector<double> get_doubles(const std::string& key) const {
    std::vector<double> out;
    for (const auto& part : split_string(get_string(key), ',')) out.push_back(to_double(key, trim(part)));
    return out;
  }

  /// Accepts decimals and simple fractions such as `1/8`.
  double get_rational(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    auto v = get_string(key);
    auto slash = v.find('/');
    if (slash == std::string::npos) return to_double(key, v);
    double den = to_double(key, trim(std::string_view(v).substr(slash + 1)));
    if (den == 0.0) throw DataError(origin_ + ": key '" + key + "' divides by zero");
    return to_double(key, trim(std::string_view(v).substr(0, slash))) / den;
  }

  std::string to_text() const {
    std::string out;
    for (const auto& [k, v] : entries_) out += k + "=" + v + "\n";
    return out;
  }

 private:
  long long to_int(const std::string& key, const std::string& v) const {
    long long out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size())
      throw DataError(origin_ + ": key '" + key + "' expects an integer, got '" + v + "'");
    return out;
  }

  double to_double(const std::string& key, const std::string& v) const {
    double out = 0;
    auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
    if (ec != std::errc{} || ptr != v.data() + v.size())
      throw DataError(origin_ + ": key '" + key + "' expects a number, got '" + v + "'");
    return out;
  }

  std::string origin_ = "<string>";
  std::vector<std::pair<std::string, std::string>> entries_;
};

}  // namespace deepstreets
