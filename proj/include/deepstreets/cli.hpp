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

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "deepstreets/config.hpp"
#include "deepstreets/dataset.hpp"
#include "deepstreets/eval.hpp"
#include "deepstreets/media.hpp"
#include "deepstreets/model.hpp"
#include "deepstreets/records.hpp"
#include "deepstreets/synthgen.hpp"
#include "deepstreets/training.hpp"

namespace deepstreets::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitData = 2;
inline constexpr int kExitRuntime = 3;

/// Environment variable that overrides the corpus root.
inline constexpr const char* kCorpusEnv = "DEEPSTREETS_CORPUS";

class UsageError : public Error {
 public:
  using Error::Error;
};

enum class Subcommand { Ingest, Synth, Compress, Split, Train, Eval, Matrix, Report, Reproduce };

inline constexpr std::array kAllSubcommands{Subcommand::Ingest, Subcommand::Synth,  Subcommand::Compress,
                                            Subcommand::Split,  Subcommand::Train,  Subcommand::Eval,
                                            Subcommand::Matrix, Subcommand::Report, Subcommand::Reproduce};

inline std::string_view to_string(Subcommand s) {
  switch (s) {
    case Subcommand::Ingest: return "ingest";
    case Subcommand::Synth: return "synth";
    case Subcommand::Compress: return "compress";
    case Subcommand::Split: return "split";
    case Subcommand::Train: return "train";
    case Subcommand::Eval: return "eval";
    case Subcommand::Matrix: return "matrix";
    case Subcommand::Report: return "report";
    case Subcommand::Reproduce: return "reproduce";
  }
  return "?";
}

inline std::optional<Subcommand> parse_subcommand(std::string_view s) {
  for (auto c : kAllSubcommands)
    if (s == to_string(c)) return c;
  return std::nullopt;
}

struct RunSpec {
  Subcommand subcommand = Subcommand::Ingest;
  std::filesystem::path config_path;
  std::filesystem::path output_dir;
  std::optional<std::uint64_t> seed;
  std::optional<Quality> quality;
  AggregationPolicy policy = AggregationPolicy::Majority;
  ReportFormat format = ReportFormat::AlignedText;
  int verbosity = 0;
};

inline std::string usage_text() {
  return "usage: deepstreets <subcommand> --config FILE --out DIR [options]\n"
         "\n"
         "subcommands:\n"
         "  ingest     scan a corpus directory into a manifest\n"
         "  synth      generate a synthetic real/fake fixture\n"
         "  compress   re-encode a manifest's videos at HQ or LQ\n"
         "  split      assign videos to train/val/test\n"
         "  train      train a detector and keep the best checkpoint\n"
         "  eval       score a checkpoint on a test split\n"
         "  matrix     evaluate checkpoints against test conditions\n"
         "  report     re-render a saved matrix in another format\n"
         "  reproduce  run a table-shaped experiment from a recipe\n"
         "\n"
         "options:\n"
         "  --config FILE                     key=value configuration\n"
         "  --out DIR                         output directory (created)\n"
         "  --seed N                          overrides the config seed\n"
         "  --quality raw|hq|lq               compression target\n"
         "  --policy majority|mean_score      headline video aggregation\n"
         "  --format text|csv|structured      report format\n"
         "  --verbose                         progress on stderr\n"
         "\n"
         "environment:\n"
         "  DEEPSTREETS_CORPUS                overrides the corpus root\n"
         "\n"
         "exit codes: 0 ok, 1 usage, 2 data error, 3 runtime failure\n";
}

/// Parses argv (without the program name). Throws UsageError.
inline RunSpec parse_args(const std::vector<std::string>& args) {
  if (args.empty()) throw UsageError("no subcommand given");
  CLI::App app{"deepstreets"};
  app.set_help_flag();
  std::string subcommand, config, out, quality, policy = "majority", format = "text";
  std::optional<std::uint64_t> seed;
  bool verbose = false;
  app.add_option("subcommand", subcommand)->required();
  app.add_option("--config", config)->required();
  app.add_option("--out", out)->required();
  app.add_option("--seed", seed);
  app.add_option("--quality", quality);
  app.add_option("--policy", policy);
  app.add_option("--format", format);
  app.add_flag("--verbose", verbose);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    throw UsageError(e.what());
  }

  RunSpec spec;
  auto sc = parse_subcommand(subcommand);
  if (!sc) throw UsageError("unknown subcommand '" + subcommand + "'");
  spec.subcommand = *sc;
  spec.config_path = config;
  spec.output_dir = out;
  spec.seed = seed;
  spec.verbosity = verbose ? 1 : 0;
  try {
    if (!quality.empty()) spec.quality = parse_quality(quality);
    spec.policy = parse_policy(policy);
    spec.format = parse_report_format(format);
  } catch (const DataError& e) {
    throw UsageError(e.what());
  }
  return spec;
}

// ---------------------------------------------------------------------------
// Shared helpers

struct Context {
  RunSpec spec;
  KeyValueConfig config;
  std::filesystem::path config_dir;
  std::ostream& out;
  std::ostream& err;

  std::filesystem::path resolve(const std::string& p) const {
    std::filesystem::path path(p);
    return path.is_relative() ? config_dir / path : path;
  }
  std::filesystem::path output(const std::string& name) const { return spec.output_dir / name; }
  void log(const std::string& msg) const {
    if (spec.verbosity > 0) err << msg << "\n";
  }
  std::uint64_t seed() const { return static_cast<std::uint64_t>(config.get_int("seed", 0)); }
};

inline const std::set<std::string>& model_config_keys() {
  static const std::set<std::string> k{"input_height", "input_width", "width_multiplier", "middle_module_count"};
  return k;
}

inline ModelConfig model_config_from(const KeyValueConfig& kv, std::uint64_t seed) {
  ModelConfig mc;
  mc.input_height = static_cast<int>(kv.get_int("input_height", mc.input_height));
  mc.input_width = static_cast<int>(kv.get_int("input_width", mc.input_width));
  mc.width_multiplier = kv.get_rational("width_multiplier", mc.width_multiplier);
  mc.middle_module_count = static_cast<int>(kv.get_int("middle_module_count", mc.middle_module_count));
  mc.seed = seed;
  mc.validate();
  return mc;
}

inline std::array<double, 3> ratios_from(const KeyValueConfig& kv) {
  std::array<double, 3> r{0.60, 0.25, 0.15};
  if (kv.has("ratios")) {
    const auto v = kv.get_doubles("ratios");
    if (v.size() != 3) throw DataError("ratios: expected three comma-separated fractions (train,val,test)");
    r = {v[0], v[1], v[2]};
  }
  check_ratios(r);
  return r;
}

template <typename... Sets>
std::set<std::string> key_union(std::initializer_list<std::string> extra, const Sets&... sets) {
  std::set<std::string> out(extra);
  (out.insert(sets.begin(), sets.end()), ...);
  return out;
}

/// Re-encodes every video of `m` under `out_dir`, mirroring relative paths
/// and keeping video ids, labels and sub-datasets so splits carry over.
inline DatasetManifest compress_manifest(const DatasetManifest& m, Quality q, const std::filesystem::path& out_dir,
                                         const Context* ctx = nullptr) {
  namespace fs = std::filesystem;
  const auto level = quality_level(q);
  DatasetManifest outm;
  outm.base_dir = out_dir;
  outm.source_description = "compressed to " + std::string(to_string(q)) + " (crf " +
                            std::to_string(level.rate_parameter.value_or(-1)) + ") from: " + m.source_description;
  for (const auto& r : m.records) {
    fs::path rel = fs::path(r.path).is_relative() ? fs::path(r.path) : fs::path(r.path).filename();
    rel.replace_extension(".mp4");
    const auto dest = out_dir / rel;
    fs::create_directories(dest.parent_path());
    auto nr = compress_video(m.resolve(r), level, dest);
    nr.video_id = r.video_id;
    nr.sub_dataset = r.sub_dataset;
    nr.label = r.label;
    nr.path = rel.generic_string();
    outm.records.push_back(std::move(nr));
    if (ctx) ctx->log("compressed " + r.video_id);
  }
  return outm;
}

/// Loads train and validation frames, trains, and writes checkpoints and
/// the training log into `run_dir`. Returns the best checkpoint path.
inline std::filesystem::path train_run(const DatasetManifest& m, const SplitAssignment& split, const ModelConfig& mc,
                                       const TrainConfig& tc, const std::filesystem::path& run_dir,
                                       const Context& ctx) {
  const auto train_records = records_in(m, split, Split::Train);
  const auto val_records = records_in(m, split, Split::Val);
  if (train_records.empty()) throw DataError("training split is empty");
  if (val_records.empty()) throw DataError("validation split is empty");
  ctx.log("loading " + std::to_string(train_records.size()) + " training and " + std::to_string(val_records.size()) +
          " validation videos");
  const auto train_set = load_frames(m, train_records, mc.input_height, mc.input_width);
  const auto val_set = load_frames(m, val_records, mc.input_height, mc.input_width);
  auto net = build_network<float>(mc);
  TrainOptions opts;
  opts.out_dir = run_dir;
  opts.on_epoch = [&](const EpochStats& s, bool improved) {
    ctx.log("epoch " + std::to_string(s.epoch) + " train_loss " + std::to_string(s.train_loss) + " val_loss " +
            std::to_string(s.val_loss) + " val_acc " + format_percent(s.val_acc) + (improved ? " (best)" : ""));
  };
  const auto result = train(net, train_set, val_set, tc, opts);
  ctx.out << "trained " << run_dir.filename().string() << ": " << result.outcome.epochs_run << " epoch(s), best epoch "
          << result.outcome.best_epoch << ", best val_loss " << result.outcome.best_val_loss
          << (result.outcome.stopped_early ? " (early stop)" : "") << "\n";
  return run_dir / "best.ckpt";
}

inline void write_all_formats(const ConditionMatrix& m, const std::filesystem::path& stem) {
  for (auto f : {ReportFormat::AlignedText, ReportFormat::Csv, ReportFormat::Structured})
    write_text_file(stem.string() + std::string(file_extension(f)), render_report(m, f));
}

inline void write_all_formats(const EvalReport& r, const std::filesystem::path& stem) {
  for (auto f : {ReportFormat::AlignedText, ReportFormat::Csv, ReportFormat::Structured})
    write_text_file(stem.string() + std::string(file_extension(f)), render_report(r, f));
}

// ---------------------------------------------------------------------------
// Subcommands

inline void cmd_ingest(Context& ctx) {
  ctx.config.reject_unknown({"root", "layout", "permissive", "source_description", "seed"});
  std::filesystem::path root;
  if (const char* env = std::getenv(kCorpusEnv); env && *env)
    root = env;
  else
    root = ctx.resolve(ctx.config.get_string("root"));
  auto rule = LayoutRule::parse(ctx.config.get_string("layout", LayoutRule{}.pattern));
  ManifestBuildOptions opts{ctx.config.get_bool("permissive", false), ctx.config.get_string("source_description", "")};
  std::vector<std::string> flagged;
  auto m = build_manifest(root, rule, opts, &flagged);
  for (const auto& f : flagged) ctx.err << "flagged: " << f << "\n";
  save_manifest(m, ctx.output("manifest.jsonl"));

  const auto report = validate_manifest(m);
  std::string text;
  std::size_t blocking = 0;
  for (const auto& f : report.findings) {
    text += std::string(to_string(f.kind)) + "\t" + f.video_id + "\t" + f.message + "\n";
    blocking += f.kind != ValidationFinding::Kind::LabelImbalance;
  }
  write_text_file(ctx.output("validation.txt"), text);
  ctx.out << "ingested " << m.size() << " videos from " << root.string() << " (" << report.findings.size()
          << " validation finding(s))\n";
  if (blocking) throw DataError("manifest validation failed; see " + ctx.output("validation.txt").string());
}

inline void cmd_synth(Context& ctx) {
  ctx.config.reject_unknown(key_union({"sub_dataset"}, FixtureConfig::keys()));
  const auto cfg = FixtureConfig::from_config(ctx.config);
  auto m = generate_fixture(cfg, ctx.spec.output_dir);
  if (ctx.config.has("sub_dataset")) {
    const auto sd = parse_sub_dataset(ctx.config.get_string("sub_dataset"));
    for (auto& r : m.records) r.sub_dataset = sd;
    save_manifest(m, ctx.output("manifest.jsonl"));
  }
  const auto doc = describe_fixture(m);
  write_text_file(ctx.output("provenance.txt"), doc);
  ctx.out << doc;
}

inline void cmd_compress(Context& ctx) {
  ctx.config.reject_unknown({"manifest", "quality", "seed"});
  Quality q;
  if (ctx.spec.quality)
    q = *ctx.spec.quality;
  else if (ctx.config.has("quality"))
    q = parse_quality(ctx.config.get_string("quality"));
  else
    throw UsageError("compress needs --quality or a 'quality' key");
  const auto m = load_manifest(ctx.resolve(ctx.config.get_string("manifest")));
  auto outm = compress_manifest(m, q, ctx.spec.output_dir, &ctx);
  save_manifest(outm, ctx.output("manifest.jsonl"));
  ctx.out << "compressed " << outm.size() << " videos to " << to_string(q) << "\n";
}

inline void cmd_split(Context& ctx) {
  ctx.config.reject_unknown({"manifest", "ratios", "seed"});
  const auto ratios = ratios_from(ctx.config);
  const auto m = load_manifest(ctx.resolve(ctx.config.get_string("manifest")));
  const auto s = split_manifest(m, ratios, ctx.seed());
  save_split(s, ctx.output("split.jsonl"));
  ctx.out << "split " << m.size() << " videos: train " << s.count(Split::Train) << ", val " << s.count(Split::Val)
          << ", test " << s.count(Split::Test) << "\n";
}

inline void cmd_train(Context& ctx) {
  ctx.config.reject_unknown(key_union({"manifest", "split", "ratios"}, train_config_keys(), model_config_keys()));
  const auto ratios = ratios_from(ctx.config);
  const auto mc = model_config_from(ctx.config, ctx.seed());
  const auto tc = train_config_from(ctx.config);
  const auto m = load_manifest(ctx.resolve(ctx.config.get_string("manifest")));
  const auto split = ctx.config.has("split") ? load_split(ctx.resolve(ctx.config.get_string("split")))
                                             : split_manifest(m, ratios, ctx.seed());
  save_split(split, ctx.output("split.jsonl"));
  train_run(m, split, mc, tc, ctx.spec.output_dir, ctx);
}

inline void cmd_eval(Context& ctx) {
  ctx.config.reject_unknown({"manifest", "split", "checkpoint", "threshold", "seed"});
  const auto m = load_manifest(ctx.resolve(ctx.config.get_string("manifest")));
  const auto split_path = ctx.resolve(ctx.config.get_string("split"));
  const auto split = load_split(split_path);
  const auto ck_path = ctx.resolve(ctx.config.get_string("checkpoint"));
  NetworkPredictor<float> predictor(network_from_checkpoint<float>(load_checkpoint(ck_path)), ck_path.string(),
                                    ctx.config.get_double("threshold", kDefaultThreshold));
  EvalOptions opts;
  opts.split_id = split_path.string();
  opts.threshold = ctx.config.get_double("threshold", kDefaultThreshold);
  const auto report = evaluate(predictor, m, split, opts);
  write_all_formats(report, ctx.output("report"));
  ctx.out << render_report(report, ctx.spec.format);
  ctx.out << "headline: frame accuracy " << format_percent(report.frame_accuracy()) << ", video accuracy ("
          << to_string(ctx.spec.policy) << ") " << format_percent(report.video_accuracy(ctx.spec.policy)) << "\n";
}

inline KeyValueConfig without_key(const KeyValueConfig& kv, const std::string& key) {
  KeyValueConfig out = KeyValueConfig::parse("", kv.origin());
  for (const auto& [k, v] : kv.entries())
    if (k != key) out.set(k, v);
  return out;
}

inline void cmd_matrix(Context& ctx) {
  const auto spec = MatrixSpec::from_config(without_key(ctx.config, "seed"), ctx.config_dir);
  const auto result = run_condition_matrix(spec);
  write_all_formats(result.matrix, ctx.output("matrix"));
  ctx.out << render_report(result.matrix, ctx.spec.format);
}

inline void cmd_report(Context& ctx) {
  ctx.config.reject_unknown({"input", "seed"});
  const auto matrix = parse_matrix(read_text_file(ctx.resolve(ctx.config.get_string("input"))));
  const auto text = render_report(matrix, ctx.spec.format);
  write_text_file(ctx.output("report" + std::string(file_extension(ctx.spec.format))), text);
  ctx.out << text;
}

// ---------------------------------------------------------------------------
// Experiment reproduction
//
// A recipe names an experiment and a scale. Both scales run the same code:
// only the source of the per-sub-dataset RAW manifests differs (generated
// fixtures or an ingested corpus). HQ and LQ variants are always produced
// by the compression harness from RAW, so one split file per sub-dataset
// applies at every quality.

enum class Experiment { Table2, Table3, Table4, UnseenGenerator };

inline Experiment parse_experiment(std::string_view s) {
  if (s == "table2") return Experiment::Table2;
  if (s == "table3") return Experiment::Table3;
  if (s == "table4") return Experiment::Table4;
  if (s == "unseen_generator") return Experiment::UnseenGenerator;
  throw DataError("unknown experiment '" + std::string(s) + "' (table2, table3, table4, unseen_generator)");
}

inline constexpr std::array kCorpusSubDatasets{SubDataset::Cityvid, SubDataset::Citywcvid, SubDataset::Kittivid};

/// Fixture stand-in for each corpus sub-dataset. Cityvid and Citywcvid share
/// real scenes (same seed), as their originals share source footage.
inline FixtureConfig fixture_for(SubDataset sd, FixtureConfig base) {
  switch (sd) {
    case SubDataset::Cityvid: base.artifact_type = ArtifactType::Checkerboard; break;
    case SubDataset::Citywcvid: base.artifact_type = ArtifactType::SpectralNotch; break;
    case SubDataset::Kittivid:
      base.artifact_type = ArtifactType::TextureSmoothing;
      base.seed += 1;
      break;
    case SubDataset::Synthetic: break;
  }
  return base;
}

inline std::string corpus_instructions(const std::filesystem::path& root) {
  return "corpus not found at '" + root.string() +
         "'. Paper-scale recipes need the DeepStreets corpus (Cityvid, Citywcvid and Kittivid sub-datasets, "
         "downloaded separately from its distribution site). Unpack it as "
         "<root>/<sub_dataset>/RAW/<real|fake>/<video files>, then set corpus_root in the recipe or the " +
         std::string(kCorpusEnv) + " environment variable.";
}

class Reproduction {
 public:
  explicit Reproduction(Context& ctx) : ctx_(ctx) {
    auto& kv = ctx.config;
    kv.reject_unknown(key_union({"experiment", "scale", "corpus_root", "ratios", "real_source", "fake_source",
                                 "heldout_fakes"},
                                FixtureConfig::keys(), model_config_keys(), train_config_keys()));
    if (kv.has("artifact_type")) throw DataError("artifact_type is fixed per sub-dataset in reproduction recipes");
    experiment_ = parse_experiment(kv.get_string("experiment"));
    const auto scale = kv.get_string("scale");
    if (scale != "paper" && scale != "fixture") throw DataError("scale must be 'paper' or 'fixture'");
    paper_scale_ = scale == "paper";
    ratios_ = ratios_from(kv);
    seed_ = ctx.seed();
    model_ = model_config_from(kv, seed_);
    train_ = train_config_from(kv);
    if (!paper_scale_) fixture_ = FixtureConfig::from_config(kv);
    if (paper_scale_) {
      if (const char* env = std::getenv(kCorpusEnv); env && *env)
        corpus_root_ = env;
      else
        corpus_root_ = ctx.resolve(kv.get_string("corpus_root", "corpus"));
      for (auto sd : kCorpusSubDatasets)
        if (!std::filesystem::is_directory(corpus_root_ / std::string(to_string(sd)) / "RAW"))
          throw DataError(corpus_instructions(corpus_root_));
    }
  }

  void run() {
    switch (experiment_) {
      case Experiment::Table2: run_table2(); break;
      case Experiment::Table3: run_compression_matrix(); break;
      case Experiment::Table4: run_cross_dataset(); break;
      case Experiment::UnseenGenerator: run_unseen(); break;
    }
  }

 private:
  struct Data {
    std::filesystem::path manifest;
    std::filesystem::path split;
  };

  std::filesystem::path data_dir(const std::string& name) const { return ctx_.output("data") / name; }

  Data raw(SubDataset sd) {
    const std::string name(to_string(sd));
    if (auto it = prepared_.find({name, Quality::Raw}); it != prepared_.end()) return it->second;
    const auto dir = data_dir(name);
    DatasetManifest m;
    if (paper_scale_) {
      if (!corpus_) corpus_ = build_manifest(corpus_root_, LayoutRule{});
      m.base_dir = corpus_->base_dir;
      m.source_description = corpus_->source_description;
      for (const auto& r : corpus_->records)
        if (r.sub_dataset == sd && r.quality == Quality::Raw) m.records.push_back(r);
      if (m.records.empty()) throw DataError(corpus_instructions(corpus_root_));
    } else {
      ctx_.log("generating " + name + " fixture");
      m = generate_fixture(fixture_for(sd, fixture_), dir / "RAW");
      for (auto& r : m.records) r.sub_dataset = sd;
    }
    save_manifest(m, dir / "RAW" / "manifest.jsonl");
    save_split(split_manifest(m, ratios_, seed_), dir / "split.jsonl");
    return prepared_[{name, Quality::Raw}] = {dir / "RAW" / "manifest.jsonl", dir / "split.jsonl"};
  }

  Data at_quality(SubDataset sd, Quality q) {
    const std::string name(to_string(sd));
    if (auto it = prepared_.find({name, q}); it != prepared_.end()) return it->second;
    const auto base = raw(sd);
    if (q == Quality::Raw) return base;
    ctx_.log("compressing " + name + " to " + std::string(to_string(q)));
    const auto dir = data_dir(name) / std::string(to_string(q));
    auto m = compress_manifest(load_manifest(base.manifest), q, dir, &ctx_);
    save_manifest(m, dir / "manifest.jsonl");
    return prepared_[{name, q}] = {dir / "manifest.jsonl", base.split};
  }

  /// Union of several sub-datasets at one quality, under `name`.
  Data merged(const std::string& name, const std::vector<SubDataset>& parts, Quality q) {
    if (auto it = prepared_.find({name, q}); it != prepared_.end()) return it->second;
    DatasetManifest m;
    SplitAssignment split;
    split.seed = seed_;
    split.ratios = ratios_;
    const auto dir = data_dir(name) / std::string(to_string(q));
    m.base_dir = dir;
    m.source_description = "union of";
    for (auto sd : parts) {
      const auto d = at_quality(sd, q);
      const auto pm = load_manifest(d.manifest);
      for (auto r : pm.records) {
        r.path = std::filesystem::absolute(pm.resolve(r)).lexically_normal().lexically_relative(std::filesystem::absolute(dir)).generic_string();
        m.records.push_back(std::move(r));
      }
      m.source_description += " " + std::string(to_string(sd));
      const auto ps = load_split(d.split);
      split.entries.insert(split.entries.end(), ps.entries.begin(), ps.entries.end());
    }
    save_manifest(m, dir / "manifest.jsonl");
    save_split(split, dir / "split.jsonl");
    return prepared_[{name, q}] = {dir / "manifest.jsonl", dir / "split.jsonl"};
  }

  std::filesystem::path train_on(const std::string& run_name, const Data& d) {
    const auto run_dir = ctx_.output("runs") / run_name;
    return train_run(load_manifest(d.manifest), load_split(d.split), model_, train_, run_dir, ctx_);
  }

  /// Writes the matrix spec as a file and evaluates it through the same
  /// path as the `matrix` subcommand.
  ConditionMatrix evaluate_spec(const std::string& name, const std::string& corner,
                                const std::vector<std::pair<std::string, std::filesystem::path>>& rows,
                                const std::vector<std::pair<std::string, Data>>& cols) {
    std::string text = "corner = " + corner + "\nrows = ";
    for (std::size_t i = 0; i < rows.size(); ++i) text += (i ? "," : "") + rows[i].first;
    text += "\ncolumns = ";
    for (std::size_t i = 0; i < cols.size(); ++i) text += (i ? "," : "") + cols[i].first;
    text += "\n";
    for (const auto& [label, ck] : rows) text += "row." + label + " = " + std::filesystem::absolute(ck).string() + "\n";
    for (const auto& [label, d] : cols) {
      text += "column." + label + ".manifest = " + std::filesystem::absolute(d.manifest).string() + "\n";
      text += "column." + label + ".split = " + std::filesystem::absolute(d.split).string() + "\n";
    }
    const auto spec_path = ctx_.output(name + ".matrix.cfg");
    write_text_file(spec_path, text);
    return run_condition_matrix(MatrixSpec::load(spec_path)).matrix;
  }

  void emit(const std::string& name, const ConditionMatrix& m) {
    write_all_formats(m, ctx_.output(name));
    ctx_.out << render_report(m, ctx_.spec.format);
  }

  void run_table2() {
    ConditionMatrix table;
    table.corner = "Dataset\\Quality";
    for (auto q : kAllQualities) table.col_labels.emplace_back(to_string(q));
    std::vector<std::pair<std::string, std::vector<SubDataset>>> rows;
    for (auto sd : kCorpusSubDatasets) rows.push_back({std::string(to_string(sd)), {sd}});
    rows.push_back({"DeepStreets", {kCorpusSubDatasets.begin(), kCorpusSubDatasets.end()}});
    for (const auto& [label, parts] : rows) {
      table.row_labels.push_back(label);
      table.cells.emplace_back();
      for (auto q : kAllQualities) {
        const auto d = parts.size() == 1 ? at_quality(parts.front(), q) : merged(label, parts, q);
        const std::string qs(to_string(q));
        const auto ck = train_on("table2_" + label + "_" + qs, d);
        const auto cell = evaluate_spec("table2_" + label + "_" + qs, "Training\\Testing", {{qs, ck}}, {{qs, d}});
        table.cells.back().push_back(cell.cells[0][0]);
      }
    }
    emit("table2", table);
  }

  void run_compression_matrix() {
    const std::vector<SubDataset> all(kCorpusSubDatasets.begin(), kCorpusSubDatasets.end());
    std::vector<std::pair<std::string, std::filesystem::path>> rows;
    std::vector<std::pair<std::string, Data>> cols;
    for (auto q : kAllQualities) {
      const std::string qs(to_string(q));
      const auto d = merged("DeepStreets", all, q);
      rows.push_back({qs, train_on("table3_" + qs, d)});
      cols.push_back({qs, d});
    }
    emit("table3", evaluate_spec("table3", "Training\\Testing", rows, cols));
  }

  void run_cross_dataset() {
    std::vector<std::pair<std::string, std::filesystem::path>> rows;
    std::vector<std::pair<std::string, Data>> cols;
    for (auto sd : kCorpusSubDatasets) {
      const std::string name(to_string(sd));
      const auto d = raw(sd);
      rows.push_back({name, train_on("table4_" + name, d)});
      cols.push_back({name, d});
    }
    emit("table4", evaluate_spec("table4", "Training\\Testing", rows, cols));
  }

  void run_unseen() {
    auto& kv = ctx_.config;
    const auto real_source = parse_sub_dataset(kv.get_string("real_source", "Cityvid"));
    const auto fake_source = parse_sub_dataset(kv.get_string("fake_source", "Kittivid"));
    const auto heldout = parse_sub_dataset(kv.get_string("heldout_fakes", "Cityvid"));
    std::vector<SubDataset> parts{real_source};
    for (auto sd : {fake_source, heldout})
      if (std::find(parts.begin(), parts.end(), sd) == parts.end()) parts.push_back(sd);
    const auto all = merged("unseen_generator", parts, Quality::Raw);
    const auto m = load_manifest(all.manifest);
    const auto split = load_split(all.split);

    DatasetManifest train_m = m;
    train_m.records.clear();
    for (const auto& r : m.records)
      if ((r.label == Label::Real && r.sub_dataset == real_source) ||
          (r.label == Label::Fake && r.sub_dataset == fake_source))
        train_m.records.push_back(r);
    const auto run_dir = ctx_.output("runs") / "unseen_generator";
    const auto ck = train_run(train_m, split, model_, train_, run_dir, ctx_);

    NetworkPredictor<float> predictor(network_from_checkpoint<float>(load_checkpoint(ck)), ck.string());
    EvalOptions opts;
    opts.split_id = all.split.string();
    const auto report = run_unseen_generator_eval(predictor, m, split, fake_source, real_source, heldout, opts);
    write_all_formats(report, ctx_.output("unseen_generator"));
    std::string prov = "unseen-generator scenario\n";
    prov += "real_source: " + std::string(to_string(real_source)) + "\n";
    prov += "fake_source (training fakes): " + std::string(to_string(fake_source)) + "\n";
    prov += "heldout_fakes (test fakes): " + std::string(to_string(heldout)) + "\n";
    prov += "scale: " + std::string(paper_scale_ ? "paper" : "fixture") + "\n";
    prov += "checkpoint: " + ck.string() + "\n";
    if (!paper_scale_)
      for (auto sd : parts)
        prov += "\n[" + std::string(to_string(sd)) + "]\n" + describe_fixture(load_manifest(raw(sd).manifest));
    write_text_file(ctx_.output("unseen_generator.provenance.txt"), prov);
    ctx_.out << render_report(report, ctx_.spec.format);
  }

  Context& ctx_;
  Experiment experiment_ = Experiment::Table2;
  bool paper_scale_ = false;
  std::array<double, 3> ratios_{};
  std::uint64_t seed_ = 0;
  ModelConfig model_;
  TrainConfig train_;
  FixtureConfig fixture_;
  std::filesystem::path corpus_root_;
  std::optional<DatasetManifest> corpus_;
  std::map<std::pair<std::string, Quality>, Data> prepared_;
};

inline void cmd_reproduce(Context& ctx) { Reproduction(ctx).run(); }

// ---------------------------------------------------------------------------
// Entry point

inline std::string run_stamp(const RunSpec& spec, const std::vector<std::string>& args, const Context* ctx,
                             std::optional<int> exit_code, const std::string& message) {
  ordered_json j;
  j["tool"] = "deepstreets";
  j["schema_version"] = kSchemaVersion;
  j["checkpoint_schema_version"] = kSchemaVersion;
  j["libavcodec"] = LIBAVCODEC_IDENT;
  j["argv"] = args;
  j["subcommand"] = to_string(spec.subcommand);
  j["config_path"] = std::filesystem::absolute(spec.config_path).string();
  j["config_snapshot"] = ctx ? ctx->config.to_text() : "";
  if (ctx)
    j["seed"] = ctx->seed();
  else
    j["seed"] = nullptr;
  j["quality"] = spec.quality ? std::string(to_string(*spec.quality)) : "";
  j["policy"] = to_string(spec.policy);
  j["format"] = to_string(spec.format);
  j["verbose"] = spec.verbosity > 0;
  if (exit_code)
    j["exit_code"] = *exit_code;
  else
    j["exit_code"] = nullptr;
  j["message"] = message;
  return j.dump(2) + "\n";
}

inline int run(const std::vector<std::string>& args, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  RunSpec spec;
  try {
    spec = parse_args(args);
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n\n" << usage_text();
    return kExitUsage;
  }

  std::optional<Context> ctx;
  auto finish = [&](int code, const std::string& message) {
    if (code != kExitOk) err << "error: " << message << "\n";
    if (code == kExitUsage) err << "\n" << usage_text();
    try {
      if (std::filesystem::is_directory(spec.output_dir))
        write_text_file(spec.output_dir / "run_stamp.json",
                        run_stamp(spec, args, ctx ? &*ctx : nullptr, code, message));
    } catch (const std::exception&) {
    }
    return code;
  };

  try {
    std::filesystem::create_directories(spec.output_dir);
    auto config = KeyValueConfig::load(spec.config_path);
    if (spec.seed) config.set("seed", std::to_string(*spec.seed));
    ctx.emplace(Context{spec, std::move(config), spec.config_path.parent_path(), out, err});
    write_text_file(spec.output_dir / "run_stamp.json", run_stamp(spec, args, &*ctx, std::nullopt, "running"));
    switch (spec.subcommand) {
      case Subcommand::Ingest: cmd_ingest(*ctx); break;
      case Subcommand::Synth: cmd_synth(*ctx); break;
      case Subcommand::Compress: cmd_compress(*ctx); break;
      case Subcommand::Split: cmd_split(*ctx); break;
      case Subcommand::Train: cmd_train(*ctx); break;
      case Subcommand::Eval: cmd_eval(*ctx); break;
      case Subcommand::Matrix: cmd_matrix(*ctx); break;
      case Subcommand::Report: cmd_report(*ctx); break;
      case Subcommand::Reproduce: cmd_reproduce(*ctx); break;
    }
    return finish(kExitOk, "ok");
  } catch (const UsageError& e) {
    return finish(kExitUsage, e.what());
  } catch (const DataError& e) {
    return finish(kExitData, e.what());
  } catch (const nlohmann::json::exception& e) {
    return finish(kExitData, e.what());
  } catch (const std::filesystem::filesystem_error& e) {
    return finish(kExitData, e.what());
  } catch (const RuntimeFailure& e) {
    return finish(kExitRuntime, e.what());
  } catch (const std::exception& e) {
    return finish(kExitRuntime, e.what());
  }
}

inline int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args);
}

}  // namespace deepstreets::cli
