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


#include <gtest/gtest.h>

#include "deepstreets/eval.hpp"
#include "support.hpp"

using namespace deepstreets;
using namespace testing_support;

namespace {

/// Sixty 30-frame videos, balanced, shared by the evaluation tests.
class EvalFixture : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = new TempDir("eval");
    manifest_ = new DatasetManifest(small_fixture(dir_->path(), 30, 30));
  }
  static void TearDownTestSuite() {
    delete manifest_;
    delete dir_;
  }
  static TempDir* dir_;
  static DatasetManifest* manifest_;
};
TempDir* EvalFixture::dir_ = nullptr;
DatasetManifest* EvalFixture::manifest_ = nullptr;

std::vector<FramePrediction> votes(int fake, int real, double fake_score = 0.9, double real_score = 0.1) {
  std::vector<FramePrediction> out;
  for (int i = 0; i < fake; ++i) out.push_back({"v", i, fake_score, Label::Fake});
  for (int i = 0; i < real; ++i) out.push_back({"v", fake + i, real_score, Label::Real});
  return out;
}

}  // namespace

TEST(Confusion, CountsAndAccuracy) {
  ConfusionCounts c;
  c.add(Label::Fake, Label::Fake);
  c.add(Label::Fake, Label::Real);
  c.add(Label::Real, Label::Real);
  c.add(Label::Real, Label::Fake);
  c.add(Label::Real, Label::Real);
  EXPECT_EQ(c, (ConfusionCounts{1, 2, 1, 1}));
  EXPECT_DOUBLE_EQ(c.accuracy(), 60.0);
  EXPECT_THROW(ConfusionCounts{}.accuracy(), DataError);
}

TEST_F(EvalFixture, PerfectPredictorScoresOneHundred) {
  auto rep = evaluate(OraclePredictor(*manifest_), *manifest_, manifest_->records);
  EXPECT_EQ(rep.frames.total(), 1800);
  EXPECT_EQ(format_percent(rep.frame_accuracy()), "100.00");
  EXPECT_EQ(rep.video_accuracy(AggregationPolicy::Majority), 100.0);
  EXPECT_EQ(rep.breakdown.size(), 1u);
}

TEST_F(EvalFixture, ConstantPredictorsScoreChance) {
  for (Label answer : {Label::Real, Label::Fake}) {
    auto rep = evaluate(ConstantPredictor(answer), *manifest_, manifest_->records);
    EXPECT_EQ(format_percent(rep.frame_accuracy()), "50.00");
    EXPECT_EQ(rep.frame_accuracy(), 50.0);
    EXPECT_EQ(rep.video_accuracy(AggregationPolicy::MeanScore), 50.0);
  }
}

TEST_F(EvalFixture, NineWrongFramesOutOfEighteenHundred) {
  std::set<std::pair<std::string, int>> flipped;
  for (int i = 0; i < 9; ++i) flipped.insert({manifest_->records[static_cast<std::size_t>(i)].video_id, i});
  auto rep = evaluate(OraclePredictor(*manifest_, flipped), *manifest_, manifest_->records);
  EXPECT_EQ(rep.frames.fp + rep.frames.fn, 9);
  EXPECT_EQ(format_percent(rep.frame_accuracy()), "99.50");
  // One wrong frame per video never flips a majority.
  EXPECT_EQ(rep.video_accuracy(AggregationPolicy::Majority), 100.0);
}

TEST_F(EvalFixture, OrderDoesNotMatter) {
  std::set<std::pair<std::string, int>> flipped{{manifest_->records[3].video_id, 0}, {manifest_->records[8].video_id, 5}};
  OraclePredictor p(*manifest_, flipped);
  auto forward = evaluate(p, *manifest_, manifest_->records);
  auto reversed_records = manifest_->records;
  std::reverse(reversed_records.begin(), reversed_records.end());
  auto reversed = evaluate(p, *manifest_, reversed_records);
  EXPECT_EQ(forward.frames, reversed.frames);
  EXPECT_EQ(forward.breakdown, reversed.breakdown);
  EXPECT_EQ(forward.videos, reversed.videos);
}

TEST_F(EvalFixture, UndecodableVideoIsNamed) {
  auto m = *manifest_;
  auto broken = m.records[4];
  broken.path = "real/does-not-exist.mkv";
  try {
    evaluate(ConstantPredictor(Label::Real), m, std::vector<VideoRecord>{broken});
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find(broken.video_id), std::string::npos);
  }
  EXPECT_THROW(evaluate(ConstantPredictor(Label::Real), m, std::vector<VideoRecord>{}), DataError);
}

TEST(Aggregation, MajorityAndTies) {
  EXPECT_EQ(aggregate_video(votes(16, 14), AggregationPolicy::Majority, 0.5), Label::Fake);
  EXPECT_EQ(aggregate_video(votes(14, 16), AggregationPolicy::Majority, 0.5), Label::Real);
  EXPECT_EQ(aggregate_video(votes(15, 15), AggregationPolicy::Majority, 0.5), Label::Fake);
  EXPECT_THROW(aggregate_video({}, AggregationPolicy::Majority, 0.5), DataError);
}

TEST(Aggregation, MeanScoreCanDisagreeWithMajority) {
  // 16 mildly fake frames and 14 confidently real ones.
  auto frames = votes(16, 14, 0.55, 0.01);
  EXPECT_EQ(aggregate_video(frames, AggregationPolicy::Majority, 0.5), Label::Fake);
  EXPECT_EQ(aggregate_video(frames, AggregationPolicy::MeanScore, 0.5), Label::Real);
}

TEST(Aggregation, PolicyNames) {
  for (auto p : kAllPolicies) EXPECT_EQ(parse_policy(to_string(p)), p);
  EXPECT_THROW(parse_policy("vote"), DataError);
}

namespace {

struct MatrixWorkspace {
  TempDir dir{"matrix"};
  DatasetManifest manifest;
  SplitAssignment split;

  MatrixWorkspace() {
    manifest = small_fixture(dir / "data", 6, 4);
    split = split_manifest(manifest, {0.5, 0.25, 0.25}, 1);
    save_split(split, dir / "split.jsonl");
  }

  std::string spec_text(const std::vector<std::string>& rows, const std::vector<std::string>& cols) const {
    std::string t = "rows = ";
    for (std::size_t i = 0; i < rows.size(); ++i) t += (i ? "," : "") + rows[i];
    t += "\ncolumns = ";
    for (std::size_t i = 0; i < cols.size(); ++i) t += (i ? "," : "") + cols[i];
    t += "\n";
    for (const auto& c : cols) t += "column." + c + ".manifest = data/manifest.jsonl\ncolumn." + c + ".split = split.jsonl\n";
    return t;
  }

  PredictorFactory factory() const {
    return [this](const MatrixRow& r) -> std::unique_ptr<Predictor> {
      if (r.label == "oracle") return std::make_unique<OraclePredictor>(manifest);
      if (r.label == "fake") return std::make_unique<ConstantPredictor>(Label::Fake);
      return std::make_unique<ConstantPredictor>(Label::Real);
    };
  }
};

}  // namespace

TEST(Matrix, SingleCellEqualsEvaluate) {
  MatrixWorkspace ws;
  auto spec = MatrixSpec::from_config(KeyValueConfig::parse(ws.spec_text({"oracle"}, {"A"})), ws.dir.path());
  auto result = run_condition_matrix(spec, ws.factory());
  auto direct = evaluate(OraclePredictor(ws.manifest), ws.manifest, ws.split);
  ASSERT_EQ(result.matrix.cells.size(), 1u);
  EXPECT_EQ(result.matrix.cells[0][0], direct.frame_accuracy());
  EXPECT_EQ(result.reports[0][0].frames, direct.frames);
  EXPECT_EQ(direct.frames.total(), 2 * 4);  // one test video per label
}

TEST(Matrix, PermutingRowsAndColumnsPermutesCells) {
  MatrixWorkspace ws;
  auto a = run_condition_matrix(
      MatrixSpec::from_config(KeyValueConfig::parse(ws.spec_text({"oracle", "fake"}, {"A", "B"})), ws.dir.path()),
      ws.factory());
  auto b = run_condition_matrix(
      MatrixSpec::from_config(KeyValueConfig::parse(ws.spec_text({"fake", "oracle"}, {"B", "A"})), ws.dir.path()),
      ws.factory());
  for (std::size_t r = 0; r < 2; ++r)
    for (std::size_t c = 0; c < 2; ++c) EXPECT_EQ(a.matrix.cells[r][c], b.matrix.cells[1 - r][1 - c]);
  EXPECT_EQ(a.matrix.cells[0][0], 100.0);
  EXPECT_EQ(a.matrix.cells[1][0], 50.0);
}

TEST(Matrix, MissingInputsNameTheCell) {
  MatrixWorkspace ws;
  auto text = ws.spec_text({"R1"}, {"C1"});
  text += "row.R1 = runs/absent.ckpt\n";
  auto spec = MatrixSpec::from_config(KeyValueConfig::parse(text), ws.dir.path());
  try {
    run_condition_matrix(spec);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("cell (R1, C1)"), std::string::npos) << e.what();
  }
  auto no_manifest = MatrixSpec::from_config(KeyValueConfig::parse("rows = R\ncolumns = C\n"), ws.dir.path());
  EXPECT_THROW(run_condition_matrix(no_manifest, ws.factory()), DataError);
  EXPECT_THROW(MatrixSpec::from_config(KeyValueConfig::parse(ws.spec_text({"R"}, {"C"}) + "colour = red\n")),
               DataError);
}

TEST(Matrix, RunsFromRealCheckpoints) {
  MatrixWorkspace ws;
  ModelConfig mc;
  mc.input_height = 32;
  mc.input_width = 64;
  mc.width_multiplier = 1.0 / 16;
  mc.middle_module_count = 0;
  Network<float> net(mc);
  std::filesystem::create_directories(ws.dir / "runs");
  save_checkpoint(make_checkpoint(net, 1, 0.5), ws.dir / "runs/m.ckpt");
  auto text = ws.spec_text({"M"}, {"C"}) + "row.M = runs/m.ckpt\n";
  write_text_file(ws.dir / "spec.cfg", text);
  auto result = run_condition_matrix(MatrixSpec::load(ws.dir / "spec.cfg"));
  auto direct = evaluate(NetworkPredictor<float>(net, "m"), ws.manifest, ws.split);
  EXPECT_EQ(result.matrix.cells[0][0], direct.frame_accuracy());
}

TEST(Rendering, PublishedCompressionMatrix) {
  auto text = render_report(published_compression_matrix(), ReportFormat::AlignedText);
  auto lines = split_string(text, '\n');
  ASSERT_GE(lines.size(), 4u);
  EXPECT_EQ(collapse_spaces(lines[0]), "Training\\Testing | RAW | HQ | LQ");
  EXPECT_EQ(collapse_spaces(lines[1]), "RAW | 99.89 | 99.90 | 95.41");
  EXPECT_EQ(collapse_spaces(lines[2]), "HQ | 100.00 | 100.00 | 95.72");
  EXPECT_EQ(collapse_spaces(lines[3]), "LQ | 99.70 | 99.63 | 99.19");
  // Columns line up.
  EXPECT_EQ(lines[0].find('|'), lines[1].find('|'));
  EXPECT_EQ(lines[1].rfind('|'), lines[3].rfind('|'));
}

TEST(Rendering, PublishedCrossDatasetMatrix) {
  auto text = render_report(published_cross_dataset_matrix(), ReportFormat::AlignedText);
  auto lines = split_string(text, '\n');
  EXPECT_EQ(collapse_spaces(lines[0]), "Training\\Testing | Cityvid | Citywcvid | Kittivid");
  EXPECT_EQ(collapse_spaces(lines[2]), "Citywcvid | 98.76 | 99.76 | 50.00");
  EXPECT_EQ(collapse_spaces(lines[3]), "Kittivid | 50.03 | 50.00 | 100.00");
}

TEST(Rendering, CsvAndStructuredRoundTrips) {
  for (const auto& m : {published_compression_matrix(), published_cross_dataset_matrix()}) {
    auto csv = render_report(m, ReportFormat::Csv);
    EXPECT_EQ(parse_matrix_csv(csv), m);
    EXPECT_EQ(render_report(parse_matrix(csv), ReportFormat::Csv), csv);
    auto structured = render_report(m, ReportFormat::Structured);
    EXPECT_EQ(parse_matrix(structured), m);
  }
  auto csv = render_report(published_compression_matrix(), ReportFormat::Csv);
  EXPECT_EQ(split_string(csv, '\n')[0], "Training\\Testing,RAW,HQ,LQ");
  EXPECT_EQ(split_string(csv, '\n')[1], "RAW,99.89,99.90,95.41");
}

TEST(Rendering, QuotingAndBadInput) {
  ConditionMatrix m;
  m.corner = "a,b";
  m.row_labels = {"row \"x\""};
  m.col_labels = {"c"};
  m.cells = {{12.346}};
  auto back = parse_matrix_csv(render_report(m, ReportFormat::Csv));
  EXPECT_EQ(back.corner, "a,b");
  EXPECT_EQ(back.row_labels[0], "row \"x\"");
  EXPECT_DOUBLE_EQ(back.cells[0][0], 12.35);  // two-decimal rendering rounds
  EXPECT_THROW(parse_matrix_csv("x,A\nr,abc\n"), DataError);
  EXPECT_THROW(parse_matrix_csv("x,A,B\nr,1\n"), DataError);
  ConditionMatrix ragged = published_compression_matrix();
  ragged.cells[1].pop_back();
  EXPECT_THROW(render_report(ragged, ReportFormat::Csv), DataError);
}

TEST(Rendering, EvalReportFormats) {
  EvalReport r;
  r.checkpoint_id = "ck";
  r.split_id = "sp";
  r.frames = {10, 9, 1, 0};
  r.breakdown[{SubDataset::Cityvid, Quality::HQ}] = r.frames;
  for (auto p : kAllPolicies) r.videos[p] = {1, 1, 0, 0};
  auto text = render_report(r, ReportFormat::AlignedText);
  EXPECT_EQ(text.rfind("# Accuracy is per-frame", 0), 0u);
  EXPECT_NE(text.find("frame accuracy: 95.00"), std::string::npos);
  auto csv = split_string(render_report(r, ReportFormat::Csv), '\n');
  EXPECT_EQ(csv[0], "Sub-dataset,Quality,Frames,TP,TN,FP,FN,Accuracy");
  EXPECT_EQ(csv[1], "Cityvid,HQ,20,10,9,1,0,95.00");
  auto head = ordered_json::parse(split_string(render_report(r, ReportFormat::Structured), '\n')[0]);
  EXPECT_EQ(head["frame_accuracy"], "95.00");
  EXPECT_EQ(head["level"], "frame");

  EvalReport empty;
  auto empty_csv = render_report(empty, ReportFormat::Csv);
  EXPECT_EQ(empty_csv, "Sub-dataset,Quality,Frames,TP,TN,FP,FN,Accuracy\n");
  EXPECT_NO_THROW(render_report(empty, ReportFormat::AlignedText));
}

TEST(Rendering, FormatNames) {
  EXPECT_EQ(parse_report_format("csv"), ReportFormat::Csv);
  EXPECT_EQ(parse_report_format("text"), ReportFormat::AlignedText);
  EXPECT_EQ(parse_report_format("structured"), ReportFormat::Structured);
  EXPECT_THROW(parse_report_format("xml"), DataError);
  EXPECT_EQ(format_percent(99.996), "100.00");
  EXPECT_EQ(format_percent(50), "50.00");
}

TEST(UnseenGenerator, UsesHeldOutFakesAndSourceReals) {
  TempDir dir("unseen");
  auto a = small_fixture(dir / "a", 4, 2, 1);
  auto b = small_fixture(dir / "b", 4, 2, 2);
  DatasetManifest m;
  m.base_dir = dir.path();
  for (auto [src, sd, prefix] : {std::tuple{&a, SubDataset::Cityvid, "a/"}, std::tuple{&b, SubDataset::Kittivid, "b/"}})
    for (auto r : src->records) {
      r.sub_dataset = sd;
      r.path = prefix + r.path;
      m.records.push_back(r);
    }
  auto split = split_manifest(m, {0.5, 0.25, 0.25}, 3);
  auto rep = run_unseen_generator_eval(OraclePredictor(m), m, split, SubDataset::Kittivid, SubDataset::Cityvid,
                                       SubDataset::Cityvid);
  // One test video per (sub-dataset, label) stratum: Cityvid real + Cityvid fake.
  EXPECT_EQ(rep.frames.total(), 4);
  EXPECT_EQ(rep.breakdown.size(), 1u);
  EXPECT_EQ(rep.breakdown.begin()->first.sub_dataset, SubDataset::Cityvid);
  // Equivalent to evaluating the same two videos directly.
  std::vector<VideoRecord> same;
  for (const auto& r : records_in(m, split, Split::Test))
    if (r.sub_dataset == SubDataset::Cityvid) same.push_back(r);
  EXPECT_EQ(evaluate(OraclePredictor(m), m, same).frames, rep.frames);
  EXPECT_THROW(run_unseen_generator_eval(OraclePredictor(m), m, split, SubDataset::Citywcvid, SubDataset::Cityvid,
                                         SubDataset::Cityvid),
               DataError);
  EXPECT_THROW(run_unseen_generator_eval(OraclePredictor(m), m, split, SubDataset::Kittivid, SubDataset::Cityvid,
                                         SubDataset::Citywcvid),
               DataError);
}
