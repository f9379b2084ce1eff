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

// Corpus data model and its line-delimited file formats.
//
// Manifest file: a header object {"schema_version", "source_description"}
// followed by one VideoRecord object per line. A record produced by the
// compression harness is followed by a sidecar line keyed "encoding_for"
// carrying codec, rate mode, rate value and pixel format.
//
// Split file: a header object {"schema_version", "seed", "ratios"} followed
// by one {"video_id", "split"} object per line.

#pragma once

#include <array>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "deepstreets/common.hpp"

namespace deepstreets {

using ordered_json = nlohmann::ordered_json;

struct EncodingInfo {
  std::string codec = "h264";
  std::string rate_mode = "crf";
  int rate_value = 23;
  std::string pix_fmt = "yuv420p";

  bool operator==(const EncodingInfo&) const = default;
};

struct VideoRecord {
  std::string video_id;
  std::string path;
  SubDataset sub_dataset = SubDataset::Synthetic;
  Label label = Label::Real;
  Quality quality = Quality::Raw;
  int frame_count = 0;
  int width = 0;
  int height = 0;
  double fps = 0.0;
  std::optional<EncodingInfo> encoding;

  bool operator==(const VideoRecord&) const = default;
};

struct DatasetManifest {
  std::vector<VideoRecord> records;
  std::string source_description;
  int schema_version = kSchemaVersion;
  /// Directory relative record paths are resolved against. Not serialized.
  std::filesystem::path base_dir;

  std::filesystem::path resolve(const VideoRecord& r) const {
    std::filesystem::path p(r.path);
    return p.is_absolute() || base_dir.empty() ? p : base_dir / p;
  }

  const VideoRecord* find(std::string_view id) const {
    for (const auto& r : records)
      if (r.video_id == id) return &r;
    return nullptr;
  }

  std::size_t size() const { return records.size(); }
};

struct SplitAssignment {
  /// In manifest order.
  std::vector<std::pair<std::string, Split>> entries;
  std::uint64_t seed = 0;
  std::array<double, 3> ratios{0.60, 0.25, 0.15};

  std::optional<Split> find(std::string_view id) const {
    for (const auto& [vid, s] : entries)
      if (vid == id) return s;
    return std::nullopt;
  }

  std::vector<std::string> ids_in(Split s) const {
    std::vector<std::string> out;
    for (const auto& [vid, sp] : entries)
      if (sp == s) out.push_back(vid);
    return out;
  }

  std::size_t count(Split s) const {
    std::size_t n = 0;
    for (const auto& e : entries) n += e.second == s;
    return n;
  }

  bool operator==(const SplitAssignment& o) const {
    return entries == o.entries && seed == o.seed && ratios == o.ratios;
  }
};

// ---------------------------------------------------------------------------
// Serialization

inline ordered_json to_json(const VideoRecord& r) {
  ordered_json j;
  j["video_id"] = r.video_id;
  j["path"] = r.path;
  j["sub_dataset"] = std::string(to_string(r.sub_dataset));
  j["label"] = std::string(to_string(r.label));
  j["quality"] = std::string(to_string(r.quality));
  j["frame_count"] = r.frame_count;
  j["width"] = r.width;
  j["height"] = r.height;
  j["fps"] = r.fps;
  return j;
}

inline ordered_json encoding_sidecar(const VideoRecord& r) {
  ordered_json j;
  j["encoding_for"] = r.video_id;
  j["codec"] = r.encoding->codec;
  j["rate_mode"] = r.encoding->rate_mode;
  j["rate_value"] = r.encoding->rate_value;
  j["pix_fmt"] = r.encoding->pix_fmt;
  return j;
}

inline VideoRecord record_from_json(const ordered_json& j) {
  static const std::array<const char*, 9> kFields{"video_id", "path",  "sub_dataset",
                                                  "label",    "quality", "frame_count",
                                                  "width",    "height", "fps"};
  for (const char* f : kFields)
    if (!j.contains(f)) throw DataError(std::string("manifest record missing field '") + f + "'");
  if (j.size() != kFields.size()) throw DataError("manifest record has unexpected fields: " + j.dump());
  try {
    VideoRecord r;
    r.video_id = j.at("video_id").get<std::string>();
    r.path = j.at("path").get<std::string>();
    r.sub_dataset = parse_sub_dataset(j.at("sub_dataset").get<std::string>());
    r.label = parse_label(j.at("label").get<std::string>());
    r.quality = parse_quality(j.at("quality").get<std::string>());
    r.frame_count = j.at("frame_count").get<int>();
    r.width = j.at("width").get<int>();
    r.height = j.at("height").get<int>();
    r.fps = j.at("fps").get<double>();
    return r;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("malformed manifest record: ") + e.what());
  }
}

inline std::string manifest_to_string(const DatasetManifest& m) {
  std::string out;
  ordered_json header;
  header["schema_version"] = m.schema_version;
  header["source_description"] = m.source_description;
  out += header.dump() + "\n";
  for (const auto& r : m.records) {
    out += to_json(r).dump() + "\n";
    if (r.encoding) out += encoding_sidecar(r).dump() + "\n";
  }
  return out;
}

inline DatasetManifest manifest_from_string(std::string_view text) {
  DatasetManifest m;
  bool have_header = false;
  std::size_t lineno = 0;
  for (const auto& line : split_string(text, '\n')) {
    ++lineno;
    if (trim(line).empty()) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw DataError("manifest line " + std::to_string(lineno) + ": " + e.what());
    }
    if (!have_header) {
      if (!j.contains("schema_version"))
        throw DataError("manifest: first line must carry schema_version");
      m.schema_version = j.at("schema_version").get<int>();
      if (m.schema_version != kSchemaVersion)
        throw DataError("manifest: unsupported schema_version " + std::to_string(m.schema_version));
      m.source_description = j.value("source_description", std::string{});
      have_header = true;
      continue;
    }
    if (j.contains("encoding_for")) {
      if (m.records.empty() || m.records.back().video_id != j.at("encoding_for").get<std::string>())
        throw DataError("manifest line " + std::to_string(lineno) +
                        ": encoding sidecar does not follow its record");
      EncodingInfo e;
      e.codec = j.at("codec").get<std::string>();
      e.rate_mode = j.at("rate_mode").get<std::string>();
      e.rate_value = j.at("rate_value").get<int>();
      e.pix_fmt = j.at("pix_fmt").get<std::string>();
      m.records.back().encoding = e;
      continue;
    }
    m.records.push_back(record_from_json(j));
  }
  if (!have_header) throw DataError("manifest: empty file");
  return m;
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_text_file(const std::filesystem::path& path, std::string_view text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.string());
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
}

inline DatasetManifest load_manifest(const std::filesystem::path& path) {
  auto m = manifest_from_string(read_text_file(path));
  m.base_dir = path.parent_path();
  return m;
}

/// Relative record paths are rewritten so they stay valid from the new
/// file's directory.
inline void save_manifest(const DatasetManifest& m, const std::filesystem::path& path) {
  namespace fs = std::filesystem;
  if (m.base_dir.empty()) {
    write_text_file(path, manifest_to_string(m));
    return;
  }
  const auto base = fs::absolute(m.base_dir).lexically_normal();
  const auto dest = fs::absolute(path).parent_path().lexically_normal();
  if (base == dest) {
    write_text_file(path, manifest_to_string(m));
    return;
  }
  DatasetManifest copy = m;
  for (auto& r : copy.records) {
    fs::path p(r.path);
    if (p.is_relative()) r.path = (base / p).lexically_normal().lexically_relative(dest).generic_string();
  }
  write_text_file(path, manifest_to_string(copy));
}

inline std::string split_to_string(const SplitAssignment& s) {
  std::string out;
  ordered_json header;
  header["schema_version"] = kSchemaVersion;
  header["seed"] = s.seed;
  header["ratios"] = s.ratios;
  out += header.dump() + "\n";
  for (const auto& [id, sp] : s.entries) {
    ordered_json j;
    j["video_id"] = id;
    j["split"] = std::string(to_string(sp));
    out += j.dump() + "\n";
  }
  return out;
}

inline SplitAssignment split_from_string(std::string_view text) {
  SplitAssignment s;
  bool have_header = false;
  for (const auto& line : split_string(text, '\n')) {
    if (trim(line).empty()) continue;
    ordered_json j;
    try {
      j = ordered_json::parse(line);
      if (!have_header) {
        if (j.at("schema_version").get<int>() != kSchemaVersion)
          throw DataError("split file: unsupported schema_version");
        s.seed = j.at("seed").get<std::uint64_t>();
        s.ratios = j.at("ratios").get<std::array<double, 3>>();
        have_header = true;
        continue;
      }
      s.entries.emplace_back(j.at("video_id").get<std::string>(),
                             parse_split(j.at("split").get<std::string>()));
    } catch (const nlohmann::json::exception& e) {
      throw DataError(std::string("malformed split file: ") + e.what());
    }
  }
  if (!have_header) throw DataError("split file: empty");
  return s;
}

inline SplitAssignment load_split(const std::filesystem::path& path) {
  return split_from_string(read_text_file(path));
}

inline void save_split(const SplitAssignment& s, const std::filesystem::path& path) {
  write_text_file(path, split_to_string(s));
}

}  // namespace deepstreets
