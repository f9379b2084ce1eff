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

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <map>
#include <numeric>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "deepstreets/common.hpp"
#include "deepstreets/media.hpp"
#include "deepstreets/random.hpp"
#include "deepstreets/records.hpp"

namespace deepstreets {

/// Maps directory structure under a corpus root onto record metadata.
///
/// The pattern names one directory level per `/`-separated component; each
/// component is a placeholder (`{sub_dataset}`, `{label}`, `{quality}`) or a
/// literal directory name. Video files sit directly below the last level.
/// Fields absent from the pattern take the defaults.
struct LayoutRule {
  std::string pattern = "{sub_dataset}/{quality}/{label}";
  SubDataset default_sub_dataset = SubDataset::Synthetic;
  Label default_label = Label::Real;
  Quality default_quality = Quality::Raw;

  static LayoutRule parse(std::string_view pattern) {
    LayoutRule r;
    r.pattern = trim(pattern);
    for (const auto& part : r.components()) {
      if (part.empty()) throw DataError("layout pattern has an empty component: " + r.pattern);
      if (part.front() == '{' && part != "{sub_dataset}" && part != "{label}" && part != "{quality}")
        throw DataError("layout pattern has an unknown placeholder " + part);
    }
    return r;
  }

  std::vector<std::string> components() const {
    if (pattern.empty()) return {};
    return split_string(pattern, '/');
  }
};

inline bool is_video_file(const std::filesystem::path& p) {
  static const std::set<std::string> kExt{".mkv", ".mp4", ".avi", ".mov", ".webm"};
  return kExt.contains(p.extension().string());
}

struct ManifestBuildOptions {
  bool permissive = false;
  std::string source_description;
};

/// Scans `root` according to `rule`. Unreadable videos are collected into
/// `flagged`; unless `permissive`, any flagged file fails the build.
inline DatasetManifest build_manifest(const std::filesystem::path& root, const LayoutRule& rule,
                                      const ManifestBuildOptions& options = {},
                                      std::vector<std::string>* flagged = nullptr) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) throw DataError("corpus root is not a directory: " + root.string());
  const auto parts = rule.components();

  std::vector<fs::path> files;
  for (const auto& entry : fs::recursive_directory_iterator(root)) {
    if (!entry.is_regular_file() || !is_video_file(entry.path())) continue;
    auto rel = fs::relative(entry.path(), root);
    if (static_cast<std::size_t>(std::distance(rel.begin(), rel.end())) != parts.size() + 1) continue;
    files.push_back(rel);
  }
  if (files.empty()) throw DataError("no videos found under " + root.string());
  std::sort(files.begin(), files.end(), [](const fs::path& a, const fs::path& b) {
    return a.generic_string() < b.generic_string();
  });

  DatasetManifest m;
  m.base_dir = root;
  m.source_description = options.source_description.empty() ? "ingested from " + root.string()
                                                             : options.source_description;
  std::vector<std::string> failures;
  for (const auto& rel : files) {
    VideoRecord r;
    r.sub_dataset = rule.default_sub_dataset;
    r.label = rule.default_label;
    r.quality = rule.default_quality;
    bool matches = true;
    auto it = rel.begin();
    for (const auto& part : parts) {
      const std::string dir = (it++)->string();
      if (part == "{sub_dataset}") r.sub_dataset = parse_sub_dataset(dir);
      else if (part == "{label}") r.label = parse_label(dir);
      else if (part == "{quality}") r.quality = parse_quality(dir);
      else if (part != dir) matches = false;
    }
    if (!matches) continue;
    auto id = rel;
    id.replace_extension();
    r.video_id = id.generic_string();
    r.path = rel.generic_string();
    try {
      auto probe = probe_video(root / rel);
      if (probe.frame_count < 1 || probe.width < 1 || probe.height < 1)
        throw DataError("no frames");
      r.frame_count = probe.frame_count;
      r.width = probe.width;
      r.height = probe.height;
      r.fps = probe.fps;
    } catch (const DataError& e) {
      failures.push_back(rel.generic_string() + ": " + e.what());
      continue;
    }
    m.records.push_back(std::move(r));
  }
  if (flagged) *flagged = failures;
  if (!failures.empty() && !options.permissive)
    throw DataError("unreadable video(s): " + failures.front() +
                    (failures.size() > 1 ? " (and " + std::to_string(failures.size() - 1) + " more)" : ""));
  if (m.records.empty()) throw DataError("no videos found under " + root.string());
  return m;
}

// ---------------------------------------------------------------------------
// Splitting

using StratumKey = std::tuple<SubDataset, Label, Quality>;

inline StratumKey stratum_of(const VideoRecord& r) { return {r.sub_dataset, r.label, r.quality}; }

inline void check_ratios(const std::array<double, 3>& ratios) {
  for (double r : ratios)
    if (!(r > 0.0)) throw DataError("ratios: every split fraction must be positive");
  const double sum = ratios[0] + ratios[1] + ratios[2];
  if (std::abs(sum - 1.0) > 1e-9)
    throw DataError("ratios: fractions must sum to 1 (got " + std::to_string(sum) + ")");
}

/// Largest-remainder apportionment of `n` items; ties go to the earlier split.
inline std::array<std::size_t, 3> apportion(std::size_t n, const std::array<double, 3>& ratios) {
  std::array<std::size_t, 3> counts{};
  std::array<double, 3> remainders{};
  std::size_t assigned = 0;
  for (int i = 0; i < 3; ++i) {
    const double exact = ratios[i] * static_cast<double>(n);
    counts[i] = static_cast<std::size_t>(std::floor(exact));
    remainders[i] = exact - std::floor(exact);
    assigned += counts[i];
  }
  std::array<int, 3> order{0, 1, 2};
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return remainders[a] > remainders[b]; });
  for (std::size_t k = 0; assigned < n; ++k, ++assigned) ++counts[order[k % 3]];
  while (assigned > n) {  // floating-point overshoot guard
    for (int i = 2; i >= 0 && assigned > n; --i)
      if (counts[i] > 0) --counts[i], --assigned;
  }
  return counts;
}

/// Video-level, stratified by (sub_dataset, label, quality). Records are
/// ordered by path before a seeded per-stratum shuffle.
inline SplitAssignment split_manifest(const DatasetManifest& manifest, const std::array<double, 3>& ratios,
                                      std::uint64_t seed) {
  check_ratios(ratios);
  if (manifest.records.empty()) throw DataError("cannot split an empty manifest");

  std::vector<std::size_t> order(manifest.records.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return manifest.records[a].path < manifest.records[b].path;
  });

  std::map<StratumKey, std::vector<std::size_t>> strata;
  for (auto i : order) strata[stratum_of(manifest.records[i])].push_back(i);

  std::vector<Split> assigned(manifest.records.size(), Split::Train);
  for (auto& [key, members] : strata) {
    if (members.size() < 3) {
      const auto& [sd, label, q] = key;
      throw DataError("stratum (" + std::string(to_string(sd)) + ", " + std::string(to_string(label)) + ", " +
                      std::string(to_string(q)) + ") has " + std::to_string(members.size()) +
                      " videos; at least 3 are needed for a three-way split");
    }
    const auto& [sd, label, q] = key;
    const auto stream = static_cast<std::uint64_t>(sd) * 100 + static_cast<std::uint64_t>(label) * 10 +
                        static_cast<std::uint64_t>(q);
    Rng rng(mix_seed(seed, stream));
    rng.shuffle(std::span(members));
    const auto counts = apportion(members.size(), ratios);
    std::size_t k = 0;
    for (int s = 0; s < 3; ++s)
      for (std::size_t c = 0; c < counts[s]; ++c) assigned[members[k++]] = kAllSplits[s];
  }

  SplitAssignment out;
  out.seed = seed;
  out.ratios = ratios;
  out.entries.reserve(manifest.records.size());
  for (std::size_t i = 0; i < manifest.records.size(); ++i)
    out.entries.emplace_back(manifest.records[i].video_id, assigned[i]);
  return out;
}

/// Records of `manifest` whose id is assigned to `split`, in manifest order.
inline std::vector<VideoRecord> records_in(const DatasetManifest& manifest, const SplitAssignment& assignment,
                                           Split split) {
  std::vector<VideoRecord> out;
  for (const auto& r : manifest.records) {
    auto s = assignment.find(r.video_id);
    if (s && *s == split) out.push_back(r);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Validation

struct ValidationFinding {
  enum class Kind { DuplicateId, MissingFile, MetadataMismatch, LabelImbalance, InvalidField };
  Kind kind;
  std::string video_id;
  std::string message;
};

inline std::string_view to_string(ValidationFinding::Kind k) {
  using K = ValidationFinding::Kind;
  switch (k) {
    case K::DuplicateId: return "duplicate id";
    case K::MissingFile: return "missing file";
    case K::MetadataMismatch: return "metadata mismatch";
    case K::LabelImbalance: return "label imbalance";
    case K::InvalidField: return "invalid field";
  }
  return "?";
}

struct ValidationReport {
  std::vector<ValidationFinding> findings;

  bool ok() const { return findings.empty(); }
  std::size_t count(ValidationFinding::Kind k) const {
    return static_cast<std::size_t>(
        std::count_if(findings.begin(), findings.end(), [k](const auto& f) { return f.kind == k; }));
  }
};

inline ValidationReport validate_manifest(const DatasetManifest& manifest) {
  using K = ValidationFinding::Kind;
  ValidationReport report;
  std::set<std::string> seen;
  std::map<std::tuple<SubDataset, Quality>, std::array<int, 2>> label_counts;
  for (const auto& r : manifest.records) {
    if (!seen.insert(r.video_id).second)
      report.findings.push_back({K::DuplicateId, r.video_id, "video_id appears more than once"});
    if (r.frame_count < 1 || r.width < 1 || r.height < 1)
      report.findings.push_back({K::InvalidField, r.video_id, "frame_count, width and height must be >= 1"});
    ++label_counts[{r.sub_dataset, r.quality}][static_cast<int>(r.label)];

    const auto path = manifest.resolve(r);
    if (!std::filesystem::exists(path)) {
      report.findings.push_back({K::MissingFile, r.video_id, "no file at " + path.string()});
      continue;
    }
    try {
      auto probe = probe_video(path);
      if (probe.frame_count != r.frame_count || probe.width != r.width || probe.height != r.height)
        report.findings.push_back(
            {K::MetadataMismatch, r.video_id,
             "recorded " + std::to_string(r.frame_count) + " frames " + std::to_string(r.width) + "x" +
                 std::to_string(r.height) + ", file has " + std::to_string(probe.frame_count) + " frames " +
                 std::to_string(probe.width) + "x" + std::to_string(probe.height)});
    } catch (const DataError& e) {
      report.findings.push_back({K::MissingFile, r.video_id, std::string("unreadable: ") + e.what()});
    }
  }
  for (const auto& [key, counts] : label_counts) {
    if (counts[0] != counts[1]) {
      const auto& [sd, q] = key;
      report.findings.push_back({K::LabelImbalance, "",
                                 std::string(to_string(sd)) + "/" + std::string(to_string(q)) + ": " +
                                     std::to_string(counts[0]) + " real vs " + std::to_string(counts[1]) +
                                     " fake"});
    }
  }
  return report;
}

}  // namespace deepstreets
