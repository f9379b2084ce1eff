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
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "deepstreets/config.hpp"
#include "deepstreets/dataset.hpp"
#include "deepstreets/media.hpp"
#include "deepstreets/model.hpp"
#include "deepstreets/records.hpp"

namespace deepstreets {

// ---------------------------------------------------------------------------
// Counting

/// Binary confusion counts with fake as the positive class.
struct ConfusionCounts {
  long long tp = 0;
  long long tn = 0;
  long long fp = 0;
  long long fn = 0;

  long long total() const { return tp + tn + fp + fn; }

  /// Percent correct. Undefined for an empty count.
  double accuracy() const {
    if (total() < 1) throw DataError("accuracy of an empty confusion count");
    return 100.0 * static_cast<double>(tp + tn) / static_cast<double>(total());
  }

  void add(Label truth, Label predicted) {
    if (truth == Label::Fake)
      (predicted == Label::Fake ? tp : fn) += 1;
    else
      (predicted == Label::Fake ? fp : tn) += 1;
  }

  ConfusionCounts& operator+=(const ConfusionCounts& o) {
    tp += o.tp;
    tn += o.tn;
    fp += o.fp;
    fn += o.fn;
    return *this;
  }

  bool operator==(const ConfusionCounts&) const = default;
};

enum class AggregationPolicy { Majority, MeanScore };
inline constexpr std::array kAllPolicies{AggregationPolicy::Majority, AggregationPolicy::MeanScore};

inline std::string_view to_string(AggregationPolicy p) {
  return p == AggregationPolicy::Majority ? "majority" : "mean_score";
}

inline AggregationPolicy parse_policy(std::string_view s) {
  for (auto p : kAllPolicies)
    if (detail::iequals(s, to_string(p))) return p;
  throw DataError("unknown aggregation policy '" + std::string(s) + "'");
}

/// Collapses one video's frame predictions into a video label. Majority
/// voting sends ties to fake; mean_score thresholds the mean fake score.
inline Label aggregate_video(std::span<const FramePrediction> frames, AggregationPolicy policy,
                             double threshold = kDefaultThreshold) {
  if (frames.empty()) throw DataError("aggregate_video: no frame predictions");
  if (policy == AggregationPolicy::Majority) {
    std::size_t fake = 0;
    for (const auto& f : frames) fake += f.predicted_label == Label::Fake;
    return 2 * fake >= frames.size() ? Label::Fake : Label::Real;
  }
  double sum = 0;
  for (const auto& f : frames) sum += f.score_fake;
  return label_for_score(sum / static_cast<double>(frames.size()), threshold);
}

// ---------------------------------------------------------------------------
// Predictors

/// Anything that scores preprocessed frames. Real runs wrap a Network;
/// tests inject scripted stand-ins.
class Predictor {
 public:
  virtual ~Predictor() = default;
  /// Frame size the predictor consumes (height, width).
  virtual std::pair<int, int> input_size() const = 0;
  virtual std::vector<FramePrediction> predict(std::span<const FrameTensor> frames) const = 0;
  virtual std::string id() const = 0;
};

template <typename T>
class NetworkPredictor final : public Predictor {
 public:
  NetworkPredictor(Network<T> net, std::string id, double threshold = kDefaultThreshold, int batch_size = 32)
      : net_(std::move(net)), id_(std::move(id)), threshold_(threshold), batch_size_(batch_size) {}

  std::pair<int, int> input_size() const override {
    return {net_.config().input_height, net_.config().input_width};
  }

  std::vector<FramePrediction> predict(std::span<const FrameTensor> frames) const override {
    std::vector<FramePrediction> out;
    out.reserve(frames.size());
    for (std::size_t s = 0; s < frames.size(); s += static_cast<std::size_t>(batch_size_)) {
      const auto chunk = frames.subspan(s, std::min<std::size_t>(batch_size_, frames.size() - s));
      const auto logits = net_.forward(make_batch<T>(chunk));
      for (int i = 0; i < logits.n; ++i) {
        auto p = prediction_from_logits(logits.at(i, 0, 0, 0), logits.at(i, 1, 0, 0), threshold_);
        p.video_id = chunk[static_cast<std::size_t>(i)].video_id;
        p.frame_index = chunk[static_cast<std::size_t>(i)].frame_index;
        out.push_back(std::move(p));
      }
    }
    return out;
  }

  std::string id() const override { return id_; }
  const Network<T>& network() const { return net_; }

 private:
  Network<T> net_;
  std::string id_;
  double threshold_;
  int batch_size_;
};

inline std::unique_ptr<Predictor> predictor_from_checkpoint(const std::filesystem::path& path) {
  auto ck = load_checkpoint(path);
  return std::make_unique<NetworkPredictor<float>>(network_from_checkpoint<float>(ck), path.string());
}

// ---------------------------------------------------------------------------
// Evaluation

struct BreakdownKey {
  SubDataset sub_dataset;
  Quality quality;
  auto operator<=>(const BreakdownKey&) const = default;
};

struct EvalReport {
  ConfusionCounts frames;
  std::map<AggregationPolicy, ConfusionCounts> videos;
  std::map<BreakdownKey, ConfusionCounts> breakdown;
  std::string checkpoint_id;
  std::string split_id;

  double frame_accuracy() const { return frames.accuracy(); }
  double video_accuracy(AggregationPolicy p) const { return videos.at(p).accuracy(); }
};

struct EvalOptions {
  std::string split_id;
  double threshold = kDefaultThreshold;
  /// Called once per video with its frame predictions.
  std::function<void(const VideoRecord&, const std::vector<FramePrediction>&)> on_video;
};

/// Scores every frame of every listed video. The result depends only on
/// the set of videos, not their order.
inline EvalReport evaluate(const Predictor& predictor, const DatasetManifest& manifest,
                           const std::vector<VideoRecord>& videos, const EvalOptions& options = {}) {
  if (videos.empty()) throw DataError("evaluate: test split is empty");
  EvalReport report;
  report.checkpoint_id = predictor.id();
  report.split_id = options.split_id;
  for (auto p : kAllPolicies) report.videos[p] = {};
  const auto [h, w] = predictor.input_size();

  for (const auto& r : videos) {
    std::vector<FrameTensor> tensors;
    try {
      auto frames = extract_frames(r, manifest.resolve(r));
      tensors.reserve(frames.size());
      for (std::size_t i = 0; i < frames.size(); ++i) {
        tensors.push_back(preprocess_frame(frames[i], h, w));
        tensors.back().video_id = r.video_id;
        tensors.back().frame_index = static_cast<int>(i);
      }
    } catch (const Error& e) {
      throw DataError("evaluate: cannot decode video '" + r.video_id + "': " + e.what());
    }
    if (tensors.empty()) throw DataError("evaluate: video '" + r.video_id + "' has no frames");

    const auto preds = predictor.predict(tensors);
    if (preds.size() != tensors.size())
      throw RuntimeFailure("evaluate: predictor returned " + std::to_string(preds.size()) + " scores for " +
                           std::to_string(tensors.size()) + " frames of '" + r.video_id + "'");
    ConfusionCounts local;
    for (const auto& p : preds) local.add(r.label, p.predicted_label);
    report.frames += local;
    report.breakdown[{r.sub_dataset, r.quality}] += local;
    for (auto policy : kAllPolicies) report.videos[policy].add(r.label, aggregate_video(preds, policy, options.threshold));
    if (options.on_video) options.on_video(r, preds);
  }
  return report;
}

inline EvalReport evaluate(const Predictor& predictor, const DatasetManifest& manifest, const SplitAssignment& split,
                           const EvalOptions& options = {}) {
  return evaluate(predictor, manifest, records_in(manifest, split, Split::Test), options);
}

/// Tests a detector on fakes from a generator it was not trained on. The
/// evaluation set pairs the test-split reals of `real_source` with the
/// test-split fakes of `heldout_fakes`.
inline EvalReport run_unseen_generator_eval(const Predictor& predictor, const DatasetManifest& manifest,
                                            const SplitAssignment& split, SubDataset fake_source,
                                            SubDataset real_source, SubDataset heldout_fakes,
                                            const EvalOptions& options = {}) {
  auto present = [&](SubDataset s, Label l) {
    return std::any_of(manifest.records.begin(), manifest.records.end(),
                       [&](const VideoRecord& r) { return r.sub_dataset == s && r.label == l; });
  };
  if (!present(fake_source, Label::Fake))
    throw DataError("unseen-generator eval: no fake videos from " + std::string(to_string(fake_source)));
  if (!present(real_source, Label::Real))
    throw DataError("unseen-generator eval: no real videos from " + std::string(to_string(real_source)));

  std::vector<VideoRecord> reals, fakes;
  for (const auto& r : records_in(manifest, split, Split::Test)) {
    if (r.label == Label::Real && r.sub_dataset == real_source) reals.push_back(r);
    if (r.label == Label::Fake && r.sub_dataset == heldout_fakes) fakes.push_back(r);
  }
  if (fakes.empty())
    throw DataError("unseen-generator eval: held-out set of " + std::string(to_string(heldout_fakes)) +
                    " fakes is empty");
  std::vector<VideoRecord> videos = reals;
  videos.insert(videos.end(), fakes.begin(), fakes.end());
  return evaluate(predictor, manifest, videos, options);
}

// ---------------------------------------------------------------------------
// Condition matrices

struct ConditionMatrix {
  std::string corner = "Training\\Testing";
  std::vector<std::string> row_labels;
  std::vector<std::string> col_labels;
  std::vector<std::vector<double>> cells;  // percent

  void validate() const {
    if (cells.size() != row_labels.size()) throw DataError("condition matrix: row count mismatch");
    for (const auto& row : cells) {
      if (row.size() != col_labels.size()) throw DataError("condition matrix: ragged row");
      for (double v : row)
        if (!(v >= 0.0 && v <= 100.0)) throw DataError("condition matrix: cell outside [0, 100]");
    }
  }

  bool operator==(const ConditionMatrix&) const = default;
};

struct MatrixRow {
  std::string label;
  std::filesystem::path checkpoint;
};

struct MatrixColumn {
  std::string label;
  std::filesystem::path manifest;
  std::filesystem::path split;
};

/// Flat text form:
///   rows = RAW,HQ,LQ
///   columns = RAW,HQ,LQ
///   row.RAW = runs/raw/best.ckpt
///   column.RAW.manifest = data/raw/manifest.jsonl
///   column.RAW.split = data/raw/split.jsonl
///   corner = Training\Testing            (optional)
/// Relative paths resolve against the config file's directory.
struct MatrixSpec {
  std::string corner = "Training\\Testing";
  std::vector<MatrixRow> rows;
  std::vector<MatrixColumn> columns;

  static MatrixSpec from_config(const KeyValueConfig& kv, const std::filesystem::path& base_dir = {}) {
    MatrixSpec spec;
    spec.corner = kv.get_string("corner", spec.corner);
    auto resolve = [&](const std::string& p) {
      std::filesystem::path path(p);
      return path.is_relative() && !base_dir.empty() ? base_dir / path : path;
    };
    auto optional_path = [&](const std::string& key) {
      return kv.has(key) ? resolve(kv.get_string(key)) : std::filesystem::path{};
    };
    for (const auto& label : split_string(kv.get_string("rows"), ','))
      spec.rows.push_back({trim(label), optional_path("row." + trim(label))});
    for (const auto& label : split_string(kv.get_string("columns"), ',')) {
      const auto l = trim(label);
      spec.columns.push_back({l, optional_path("column." + l + ".manifest"), optional_path("column." + l + ".split")});
    }
    std::set<std::string> allowed{"rows", "columns", "corner"};
    for (const auto& r : spec.rows) allowed.insert("row." + r.label);
    for (const auto& c : spec.columns) {
      allowed.insert("column." + c.label + ".manifest");
      allowed.insert("column." + c.label + ".split");
    }
    kv.reject_unknown(allowed);
    return spec;
  }

  static MatrixSpec load(const std::filesystem::path& path) {
    return from_config(KeyValueConfig::load(path), path.parent_path());
  }
};

using PredictorFactory = std::function<std::unique_ptr<Predictor>(const MatrixRow&)>;

struct MatrixResult {
  ConditionMatrix matrix;
  std::vector<std::vector<EvalReport>> reports;  // [row][column]
};

/// Cell (r, c) is the per-frame accuracy of row r's checkpoint on column
/// c's test split.
inline MatrixResult run_condition_matrix(const MatrixSpec& spec, const PredictorFactory& factory = {}) {
  if (spec.rows.empty() || spec.columns.empty()) throw DataError("condition matrix: no rows or no columns");
  auto cell = [](const MatrixRow& r, const MatrixColumn& c) {
    return "cell (" + r.label + ", " + c.label + "): ";
  };
  for (const auto& r : spec.rows)
    if (!factory && (r.checkpoint.empty() || !std::filesystem::exists(r.checkpoint)))
      throw DataError(cell(r, spec.columns.front()) + "checkpoint for row " + r.label + " not found: '" +
                      r.checkpoint.string() + "'");
  struct TestSet {
    DatasetManifest manifest;
    SplitAssignment split;
  };
  std::vector<TestSet> tests;
  for (const auto& c : spec.columns) {
    if (c.manifest.empty() || !std::filesystem::exists(c.manifest))
      throw DataError(cell(spec.rows.front(), c) + "test manifest for column " + c.label + " not found: '" +
                      c.manifest.string() + "'");
    if (c.split.empty() || !std::filesystem::exists(c.split))
      throw DataError(cell(spec.rows.front(), c) + "test split for column " + c.label + " not found: '" +
                      c.split.string() + "'");
    tests.push_back({load_manifest(c.manifest), load_split(c.split)});
  }

  MatrixResult out;
  out.matrix.corner = spec.corner;
  for (const auto& r : spec.rows) out.matrix.row_labels.push_back(r.label);
  for (const auto& c : spec.columns) out.matrix.col_labels.push_back(c.label);
  for (const auto& r : spec.rows) {
    auto predictor = factory ? factory(r) : predictor_from_checkpoint(r.checkpoint);
    if (!predictor) throw DataError(cell(r, spec.columns.front()) + "no checkpoint for row " + r.label);
    out.matrix.cells.emplace_back();
    out.reports.emplace_back();
    for (std::size_t c = 0; c < spec.columns.size(); ++c) {
      EvalOptions opts;
      opts.split_id = spec.columns[c].split.string();
      auto rep = evaluate(*predictor, tests[c].manifest, tests[c].split, opts);
      out.matrix.cells.back().push_back(rep.frame_accuracy());
      out.reports.back().push_back(std::move(rep));
    }
  }
  out.matrix.validate();
  return out;
}

// ---------------------------------------------------------------------------
// Rendering

enum class ReportFormat { AlignedText, Csv, Structured };

inline ReportFormat parse_report_format(std::string_view s) {
  if (detail::iequals(s, "text") || detail::iequals(s, "aligned_text")) return ReportFormat::AlignedText;
  if (detail::iequals(s, "csv")) return ReportFormat::Csv;
  if (detail::iequals(s, "structured") || detail::iequals(s, "jsonl")) return ReportFormat::Structured;
  throw DataError("unknown report format '" + std::string(s) + "'");
}

inline std::string_view to_string(ReportFormat f) {
  switch (f) {
    case ReportFormat::AlignedText: return "text";
    case ReportFormat::Csv: return "csv";
    case ReportFormat::Structured: return "structured";
  }
  return "?";
}

inline std::string_view file_extension(ReportFormat f) {
  switch (f) {
    case ReportFormat::AlignedText: return ".txt";
    case ReportFormat::Csv: return ".csv";
    case ReportFormat::Structured: return ".jsonl";
  }
  return "";
}

inline std::string format_percent(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

namespace detail {

/// Columns separated by " | ", each padded to its widest entry except the
/// last, which is never padded.
inline std::string aligned_table(const std::vector<std::vector<std::string>>& rows) {
  std::vector<std::size_t> width;
  for (const auto& r : rows)
    for (std::size_t i = 0; i < r.size(); ++i) {
      if (width.size() <= i) width.push_back(0);
      width[i] = std::max(width[i], r[i].size());
    }
  std::string out;
  for (const auto& r : rows) {
    for (std::size_t i = 0; i < r.size(); ++i) {
      out += r[i];
      if (i + 1 < r.size()) out += std::string(width[i] - r[i].size(), ' ') + " | ";
    }
    out += "\n";
  }
  return out;
}

inline std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

inline std::string csv_line(const std::vector<std::string>& fields) {
  std::string out;
  for (std::size_t i = 0; i < fields.size(); ++i) out += (i ? "," : "") + csv_field(fields[i]);
  return out + "\n";
}

}  // namespace detail

/// Splits CSV text into rows of fields; handles quoted fields.
inline std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool quoted = false, any = false;
  for (std::size_t i = 0; i < text.size(); ++i) {
    const char c = text[i];
    if (quoted) {
      if (c == '"' && i + 1 < text.size() && text[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
      continue;
    }
    if (c == '"') {
      quoted = any = true;
    } else if (c == ',') {
      row.push_back(std::move(field));
      field.clear();
      any = true;
    } else if (c == '\n' || c == '\r') {
      if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
      if (any || !field.empty()) row.push_back(std::move(field));
      if (!row.empty()) rows.push_back(std::move(row));
      row.clear();
      field.clear();
      any = false;
    } else {
      field += c;
      any = true;
    }
  }
  if (quoted) throw DataError("csv: unterminated quoted field");
  if (any || !field.empty()) row.push_back(std::move(field));
  if (!row.empty()) rows.push_back(std::move(row));
  return rows;
}

inline std::string render_report(const ConditionMatrix& m, ReportFormat format) {
  m.validate();
  switch (format) {
    case ReportFormat::AlignedText:
    case ReportFormat::Csv: {
      std::vector<std::vector<std::string>> rows;
      rows.push_back({m.corner});
      for (const auto& c : m.col_labels) rows.back().push_back(c);
      for (std::size_t r = 0; r < m.row_labels.size(); ++r) {
        rows.push_back({m.row_labels[r]});
        for (double v : m.cells[r]) rows.back().push_back(format_percent(v));
      }
      if (format == ReportFormat::AlignedText) return detail::aligned_table(rows);
      std::string out;
      for (const auto& r : rows) out += detail::csv_line(r);
      return out;
    }
    case ReportFormat::Structured: {
      std::string out;
      ordered_json head;
      head["kind"] = "condition_matrix";
      head["schema_version"] = kSchemaVersion;
      head["corner"] = m.corner;
      head["rows"] = m.row_labels;
      head["columns"] = m.col_labels;
      head["unit"] = "percent per-frame accuracy";
      out += head.dump() + "\n";
      for (std::size_t r = 0; r < m.row_labels.size(); ++r)
        for (std::size_t c = 0; c < m.col_labels.size(); ++c) {
          ordered_json j;
          j["row"] = m.row_labels[r];
          j["column"] = m.col_labels[c];
          j["accuracy"] = format_percent(m.cells[r][c]);
          out += j.dump() + "\n";
        }
      return out;
    }
  }
  return {};
}

inline ConditionMatrix parse_matrix_csv(std::string_view text) {
  const auto rows = parse_csv(text);
  if (rows.empty()) throw DataError("matrix csv: missing header row");
  ConditionMatrix m;
  m.corner = rows[0][0];
  m.col_labels.assign(rows[0].begin() + 1, rows[0].end());
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (rows[r].size() != rows[0].size())
      throw DataError("matrix csv: row " + std::to_string(r) + " has " + std::to_string(rows[r].size()) +
                      " fields, header has " + std::to_string(rows[0].size()));
    m.row_labels.push_back(rows[r][0]);
    m.cells.emplace_back();
    for (std::size_t c = 1; c < rows[r].size(); ++c) {
      try {
        std::size_t used = 0;
        const double v = std::stod(rows[r][c], &used);
        if (used != rows[r][c].size()) throw std::invalid_argument("trailing");
        m.cells.back().push_back(v);
      } catch (const std::exception&) {
        throw DataError("matrix csv: bad number '" + rows[r][c] + "'");
      }
    }
  }
  m.validate();
  return m;
}

inline ConditionMatrix parse_matrix_structured(std::string_view text) {
  ConditionMatrix m;
  bool header = false;
  for (const auto& line : split_string(text, '\n')) {
    if (trim(line).empty()) continue;
    auto j = ordered_json::parse(line);
    if (!header) {
      if (j.value("kind", "") != "condition_matrix") throw DataError("structured report is not a condition matrix");
      m.corner = j.at("corner").get<std::string>();
      m.row_labels = j.at("rows").get<std::vector<std::string>>();
      m.col_labels = j.at("columns").get<std::vector<std::string>>();
      m.cells.assign(m.row_labels.size(), std::vector<double>(m.col_labels.size(), -1.0));
      header = true;
      continue;
    }
    auto idx = [](const std::vector<std::string>& v, const std::string& s) {
      auto it = std::find(v.begin(), v.end(), s);
      if (it == v.end()) throw DataError("structured report: unknown label '" + s + "'");
      return static_cast<std::size_t>(it - v.begin());
    };
    m.cells[idx(m.row_labels, j.at("row"))][idx(m.col_labels, j.at("column"))] = std::stod(j.at("accuracy").get<std::string>());
  }
  if (!header) throw DataError("structured report: empty");
  m.validate();
  return m;
}

/// Accepts either CSV or structured matrix text.
inline ConditionMatrix parse_matrix(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string_view::npos && text[first] == '{') return parse_matrix_structured(text);
  return parse_matrix_csv(text);
}

inline std::string render_report(const EvalReport& r, ReportFormat format) {
  auto breakdown_rows = [&]() {
    std::vector<std::vector<std::string>> rows;
    for (const auto& [key, counts] : r.breakdown)
      rows.push_back({std::string(to_string(key.sub_dataset)), std::string(to_string(key.quality)),
                      std::to_string(counts.total()), std::to_string(counts.tp), std::to_string(counts.tn),
                      std::to_string(counts.fp), std::to_string(counts.fn), format_percent(counts.accuracy())});
    return rows;
  };
  const std::vector<std::string> header{"Sub-dataset", "Quality", "Frames", "TP", "TN", "FP", "FN", "Accuracy"};

  switch (format) {
    case ReportFormat::AlignedText: {
      std::string out;
      out += "# Accuracy is per-frame; video-level accuracy is reported separately and never substituted.\n";
      out += "checkpoint: " + r.checkpoint_id + "\n";
      out += "split: " + r.split_id + "\n";
      if (r.frames.total() > 0) {
        out += "frames: " + std::to_string(r.frames.total()) + " (tp " + std::to_string(r.frames.tp) + ", tn " +
               std::to_string(r.frames.tn) + ", fp " + std::to_string(r.frames.fp) + ", fn " +
               std::to_string(r.frames.fn) + ")\n";
        out += "frame accuracy: " + format_percent(r.frame_accuracy()) + "\n";
      }
      for (const auto& [policy, counts] : r.videos)
        if (counts.total() > 0)
          out += "video accuracy (" + std::string(to_string(policy)) + "): " + format_percent(counts.accuracy()) +
                 " over " + std::to_string(counts.total()) + " videos\n";
      out += "\n";
      auto rows = breakdown_rows();
      rows.insert(rows.begin(), header);
      return out + detail::aligned_table(rows);
    }
    case ReportFormat::Csv: {
      std::string out = detail::csv_line(header);
      for (const auto& row : breakdown_rows()) out += detail::csv_line(row);
      return out;
    }
    case ReportFormat::Structured: {
      ordered_json head;
      head["kind"] = "eval_report";
      head["schema_version"] = kSchemaVersion;
      head["checkpoint"] = r.checkpoint_id;
      head["split"] = r.split_id;
      head["level"] = "frame";
      head["tp"] = r.frames.tp;
      head["tn"] = r.frames.tn;
      head["fp"] = r.frames.fp;
      head["fn"] = r.frames.fn;
      if (r.frames.total() > 0) head["frame_accuracy"] = format_percent(r.frame_accuracy());
      for (const auto& [policy, counts] : r.videos)
        if (counts.total() > 0)
          head["video_accuracy_" + std::string(to_string(policy))] = format_percent(counts.accuracy());
      std::string out = head.dump() + "\n";
      for (const auto& [key, counts] : r.breakdown) {
        ordered_json j;
        j["sub_dataset"] = to_string(key.sub_dataset);
        j["quality"] = to_string(key.quality);
        j["tp"] = counts.tp;
        j["tn"] = counts.tn;
        j["fp"] = counts.fp;
        j["fn"] = counts.fn;
        j["accuracy"] = format_percent(counts.accuracy());
        out += j.dump() + "\n";
      }
      return out;
    }
  }
  return {};
}

}  // namespace deepstreets
