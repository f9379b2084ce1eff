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

#include <opencv2/videoio.hpp>

#include "deepstreets/dataset.hpp"
#include "support.hpp"

using namespace deepstreets;
using testing_support::TempDir;

namespace {

DatasetManifest balanced_manifest(int per_label) {
  DatasetManifest m;
  for (Label label : {Label::Real, Label::Fake})
    for (int i = 0; i < per_label; ++i) {
      VideoRecord r;
      r.video_id = std::string(to_string(label)) + "-" + std::to_string(i);
      r.path = r.video_id + ".mkv";
      r.label = label;
      r.frame_count = 30;
      r.width = 128;
      r.height = 64;
      r.fps = 10;
      m.records.push_back(r);
    }
  return m;
}

int opencv_frame_count(const std::filesystem::path& p) {
  cv::VideoCapture cap(p.string());
  if (!cap.isOpened()) return -1;
  cv::Mat frame;
  int n = 0;
  while (cap.read(frame)) ++n;
  return n;
}

}  // namespace

TEST(Split, FourHundredVideosGiveExactCounts) {
  auto m = balanced_manifest(200);
  auto s = split_manifest(m, {0.60, 0.25, 0.15}, 11);
  EXPECT_EQ(s.count(Split::Train), 240u);
  EXPECT_EQ(s.count(Split::Val), 100u);
  EXPECT_EQ(s.count(Split::Test), 60u);
  std::set<std::string> seen;
  for (const auto& [id, sp] : s.entries) EXPECT_TRUE(seen.insert(id).second);
  EXPECT_EQ(seen.size(), 400u);
  for (auto sp : kAllSplits) {
    int real = 0, fake = 0;
    for (const auto& r : records_in(m, s, sp)) (r.label == Label::Real ? real : fake)++;
    EXPECT_LE(std::abs(real - fake), 1) << to_string(sp);
  }
}

TEST(Split, DeterministicForSeedAndSensitiveToIt) {
  auto m = balanced_manifest(50);
  auto first = split_manifest(m, {0.6, 0.25, 0.15}, 5);
  for (int i = 0; i < 10; ++i) EXPECT_EQ(split_manifest(m, {0.6, 0.25, 0.15}, 5), first);
  EXPECT_NE(split_manifest(m, {0.6, 0.25, 0.15}, 6).entries, first.entries);
}

TEST(Split, IndependentOfManifestOrder) {
  auto m = balanced_manifest(20);
  auto a = split_manifest(m, {0.6, 0.25, 0.15}, 5);
  std::reverse(m.records.begin(), m.records.end());
  auto b = split_manifest(m, {0.6, 0.25, 0.15}, 5);
  for (const auto& [id, sp] : a.entries) EXPECT_EQ(b.find(id), sp);
}

TEST(Split, TinyStratumIsRejected) {
  auto m = balanced_manifest(3);
  m.records.pop_back();
  m.records.pop_back();
  try {
    split_manifest(m, {0.6, 0.25, 0.15}, 1);
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("stratum"), std::string::npos);
  }
}

TEST(Split, RatiosAreChecked) {
  auto m = balanced_manifest(10);
  EXPECT_THROW(split_manifest(m, {0.6, 0.2, 0.1}, 1), DataError);
  EXPECT_THROW(split_manifest(m, {1.0, 0.0, 0.0}, 1), DataError);
  EXPECT_THROW(split_manifest(DatasetManifest{}, {0.6, 0.25, 0.15}, 1), DataError);
}

TEST(Split, StrataAreSplitSeparately) {
  auto m = balanced_manifest(10);
  for (auto& r : m.records)
    if (r.video_id.ends_with("-0") || r.video_id.ends_with("-1") || r.video_id.ends_with("-2") ||
        r.video_id.ends_with("-3"))
      r.sub_dataset = SubDataset::Kittivid;
  auto s = split_manifest(m, {0.5, 0.25, 0.25}, 3);
  for (auto sd : {SubDataset::Kittivid, SubDataset::Synthetic})
    for (auto label : {Label::Real, Label::Fake}) {
      int test = 0;
      for (const auto& r : records_in(m, s, Split::Test)) test += r.sub_dataset == sd && r.label == label;
      EXPECT_GE(test, 1);
    }
}

TEST(Apportion, LargestRemainder) {
  EXPECT_EQ(apportion(10, {0.6, 0.25, 0.15}), (std::array<std::size_t, 3>{6, 3, 1}));
  EXPECT_EQ(apportion(3, {0.6, 0.25, 0.15}), (std::array<std::size_t, 3>{2, 1, 0}));
  for (std::size_t n = 0; n < 50; ++n) {
    auto c = apportion(n, {0.6, 0.25, 0.15});
    EXPECT_EQ(c[0] + c[1] + c[2], n);
  }
}

TEST(BuildManifest, EmptyRootFails) {
  TempDir dir("empty");
  try {
    build_manifest(dir.path(), LayoutRule::parse("{label}"));
    FAIL();
  } catch (const DataError& e) {
    EXPECT_NE(std::string(e.what()).find("no videos found"), std::string::npos);
  }
  EXPECT_THROW(build_manifest(dir / "missing", LayoutRule::parse("{label}")), DataError);
}

TEST(BuildManifest, ProbesFramesAgainstIndependentDecoder) {
  TempDir dir("ingest");
  FixtureConfig cfg;
  cfg.num_videos_per_class = 1;
  cfg.frames_per_video = 30;
  cfg.width = 64;
  cfg.height = 32;
  std::vector<std::filesystem::path> files;
  for (int i = 0; i < 3; ++i) {
    const Label label = i == 1 ? Label::Fake : Label::Real;
    auto frames = render_video(cfg, i, label);
    auto p = dir / ("Cityvid/RAW/" + std::string(to_string(label)) + "/clip" + std::to_string(i) + ".mkv");
    std::filesystem::create_directories(p.parent_path());
    write_lossless_video(p, frames, 10);
    files.push_back(p);
  }
  std::filesystem::create_directories(dir / "Cityvid/RAW/real/notes");
  write_text_file(dir / "Cityvid/RAW/real/readme.txt", "not a video");

  auto m = build_manifest(dir.path(), LayoutRule::parse("{sub_dataset}/{quality}/{label}"));
  ASSERT_EQ(m.size(), 3u);
  for (const auto& r : m.records) {
    EXPECT_EQ(r.frame_count, opencv_frame_count(m.resolve(r))) << r.video_id;
    EXPECT_EQ(r.frame_count, 30);
    EXPECT_EQ(r.width, 64);
    EXPECT_EQ(r.height, 32);
    EXPECT_EQ(r.sub_dataset, SubDataset::Cityvid);
    EXPECT_EQ(r.quality, Quality::Raw);
  }
  EXPECT_EQ(m.find("Cityvid/RAW/fake/clip1")->label, Label::Fake);
  EXPECT_TRUE(validate_manifest(m).count(ValidationFinding::Kind::LabelImbalance) == 1);
}

TEST(BuildManifest, UnreadableFilesFailUnlessPermissive) {
  TempDir dir("bad");
  FixtureConfig cfg;
  cfg.num_videos_per_class = 1;
  cfg.frames_per_video = 2;
  cfg.width = 32;
  cfg.height = 32;
  std::filesystem::create_directories(dir / "real");
  write_lossless_video(dir / "real/good.mkv", render_video(cfg, 0, Label::Real), 10);
  write_text_file(dir / "real/broken.mkv", "garbage bytes");
  EXPECT_THROW(build_manifest(dir.path(), LayoutRule::parse("{label}")), DataError);
  std::vector<std::string> flagged;
  auto m = build_manifest(dir.path(), LayoutRule::parse("{label}"), {.permissive = true, .source_description = ""}, &flagged);
  EXPECT_EQ(m.size(), 1u);
  ASSERT_EQ(flagged.size(), 1u);
  EXPECT_NE(flagged[0].find("broken.mkv"), std::string::npos);
}

TEST(LayoutRule, RejectsUnknownPlaceholders) {
  EXPECT_THROW(LayoutRule::parse("{sub_dataset}/{colour}"), DataError);
  EXPECT_THROW(LayoutRule::parse("a//b"), DataError);
}

TEST(Validate, DuplicateIdsAndMetadataMismatch) {
  TempDir dir("validate");
  auto m = testing_support::small_fixture(dir.path(), 3, 30);
  EXPECT_TRUE(validate_manifest(m).ok());

  auto dup = m;
  dup.records.push_back(dup.records.front());
  auto report = validate_manifest(dup);
  EXPECT_EQ(report.count(ValidationFinding::Kind::DuplicateId), 1u);

  // Re-write one video with a frame missing.
  const auto& victim = m.records[2];
  auto frames = read_all_frames(m.resolve(victim));
  frames.pop_back();
  write_lossless_video(m.resolve(victim), frames, 10);
  ASSERT_EQ(opencv_frame_count(m.resolve(victim)), 29);
  report = validate_manifest(m);
  ASSERT_EQ(report.count(ValidationFinding::Kind::MetadataMismatch), 1u);
  EXPECT_EQ(report.findings[0].video_id, victim.video_id);

  std::filesystem::remove(m.resolve(m.records[0]));
  EXPECT_EQ(validate_manifest(m).count(ValidationFinding::Kind::MissingFile), 1u);
}
