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

#include <array>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace deepstreets {

inline constexpr int kSchemaVersion = 1;

// Error taxonomy. The CLI maps these onto exit codes (usage 1, data 2,
// runtime 3), so every throw site picks the category by what went wrong,
// not by which module it lives in.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent inputs: configs, manifests, media files.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Tensor or parameter shapes that do not fit together.
class ShapeError : public DataError {
 public:
  using DataError::DataError;
};

/// Failures while computing: encoder crashes, non-finite losses.
class RuntimeFailure : public Error {
 public:
  using Error::Error;
};

enum class SubDataset { Cityvid, Citywcvid, Kittivid, Synthetic };
enum class Label { Real, Fake };
enum class Quality { Raw, HQ, LQ };
enum class Split { Train, Val, Test };

inline constexpr std::array kAllSubDatasets{SubDataset::Cityvid, SubDataset::Citywcvid,
                                            SubDataset::Kittivid, SubDataset::Synthetic};
inline constexpr std::array kAllQualities{Quality::Raw, Quality::HQ, Quality::LQ};
inline constexpr std::array kAllSplits{Split::Train, Split::Val, Split::Test};

inline std::string_view to_string(SubDataset s) {
  switch (s) {
    case SubDataset::Cityvid: return "Cityvid";
    case SubDataset::Citywcvid: return "Citywcvid";
    case SubDataset::Kittivid: return "Kittivid";
    case SubDataset::Synthetic: return "Synthetic";
  }
  return "?";
}

inline std::string_view to_string(Label l) { return l == Label::Real ? "real" : "fake"; }

inline std::string_view to_string(Quality q) {
  switch (q) {
    case Quality::Raw: return "RAW";
    case Quality::HQ: return "HQ";
    case Quality::LQ: return "LQ";
  }
  return "?";
}

inline std::string_view to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Val: return "val";
    case Split::Test: return "test";
  }
  return "?";
}

namespace detail {
inline char lower(char c) { return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : c; }

inline bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (lower(a[i]) != lower(b[i])) return false;
  return true;
}
}  // namespace detail

// Parsing is case-insensitive so that config files may say "raw" or "RAW".
inline SubDataset parse_sub_dataset(std::string_view s) {
  for (auto v : kAllSubDatasets)
    if (detail::iequals(s, to_string(v))) return v;
  throw DataError("unknown sub_dataset '" + std::string(s) + "'");
}

inline Label parse_label(std::string_view s) {
  if (detail::iequals(s, "real")) return Label::Real;
  if (detail::iequals(s, "fake")) return Label::Fake;
  throw DataError("unknown label '" + std::string(s) + "'");
}

inline Quality parse_quality(std::string_view s) {
  for (auto v : kAllQualities)
    if (detail::iequals(s, to_string(v))) return v;
  throw DataError("unknown quality '" + std::string(s) + "'");
}

inline Split parse_split(std::string_view s) {
  for (auto v : kAllSplits)
    if (detail::iequals(s, to_string(v))) return v;
  throw DataError("unknown split '" + std::string(s) + "'");
}

/// 64-bit FNV-1a, used for manifest checksums.
inline std::uint64_t fnv1a64(std::string_view data, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::vector<std::string> split_string(std::string_view s, char sep) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (;;) {
    auto pos = s.find(sep, start);
    out.emplace_back(s.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::string trim(std::string_view s) {
  auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace deepstreets
