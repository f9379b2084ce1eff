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

// Synthetic real/fake fixture videos.
//
// A "real" video is a camera panning across a procedural street-like
// scene: a vertical brightness gradient plus multi-octave value noise with
// amplitude proportional to lattice spacing (a 1/f-like spectrum), tinted
// per video, with mild per-frame sensor noise. The "fake" video with the
// same index renders the identical scene and then injects one artifact:
//
//   checkerboard       period-2 overlap pattern of a stride-2, kernel-3
//                      transposed convolution, added to every channel
//   spectral_notch     horizontal high-pass component partially removed
//   texture_smoothing  blend with a 3x3 binomial blur
//
// Each artifact scales linearly with artifact_strength, so the fake
// converges to the real video as the strength goes to zero.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <unsupported/Eigen/FFT>

#include "deepstreets/config.hpp"
#include "deepstreets/media.hpp"
#include "deepstreets/model.hpp"
#include "deepstreets/random.hpp"
#include "deepstreets/records.hpp"

namespace deepstreets {

enum class ArtifactType { Checkerboard, SpectralNotch, TextureSmoothing };
inline constexpr std::array kAllArtifactTypes{ArtifactType::Checkerboard, ArtifactType::SpectralNotch,
                                              ArtifactType::TextureSmoothing};

inline std::string_view to_string(ArtifactType a) {
  switch (a) {
    case ArtifactType::Checkerboard: return "checkerboard";
    case ArtifactType::SpectralNotch: return "spectral_notch";
    case ArtifactType::TextureSmoothing: return "texture_smoothing";
  }
  return "?";
}

inline ArtifactType parse_artifact_type(std::string_view s) {
  for (auto a : kAllArtifactTypes)
    if (detail::iequals(s, to_string(a))) return a;
  throw DataError("unknown artifact_type '" + std::string(s) + "'");
}

inline constexpr double kFixtureFps = 10.0;
/// Peak checkerboard deviation, in 8-bit levels, at strength 1.
inline constexpr double kCheckerboardAmplitude = 48.0;

struct FixtureConfig {
  int num_videos_per_class = 40;
  int frames_per_video = 30;
  int width = 128;
  int height = 64;
  ArtifactType artifact_type = ArtifactType::Checkerboard;
  double artifact_strength = 0.5;
  std::uint64_t seed = 0;

  void validate() const {
    if (num_videos_per_class < 1) throw DataError("num_videos_per_class must be >= 1");
    if (frames_per_video < 1) throw DataError("frames_per_video must be >= 1");
    if (width < kDownsampling || height < kDownsampling || width % kDownsampling || height % kDownsampling)
      throw DataError("fixture dimensions " + std::to_string(width) + "x" + std::to_string(height) +
                      " must be positive multiples of " + std::to_string(kDownsampling));
    if (!(artifact_strength > 0.0 && artifact_strength <= 1.0))
      throw DataError("artifact_strength must lie in (0, 1]");
  }

  static const std::set<std::string>& keys() {
    static const std::set<std::string> k{"num_videos_per_class", "frames_per_video", "width", "height",
                                         "artifact_type",        "artifact_strength", "seed"};
    return k;
  }

  /// Reads the fixture keys of `kv`; absent keys keep their defaults.
  static FixtureConfig from_config(const KeyValueConfig& kv) {
    FixtureConfig c;
    c.num_videos_per_class = static_cast<int>(kv.get_int("num_videos_per_class", c.num_videos_per_class));
    c.frames_per_video = static_cast<int>(kv.get_int("frames_per_video", c.frames_per_video));
    c.width = static_cast<int>(kv.get_int("width", c.width));
    c.height = static_cast<int>(kv.get_int("height", c.height));
    if (kv.has("artifact_type")) c.artifact_type = parse_artifact_type(kv.get_string("artifact_type"));
    c.artifact_strength = kv.get_double("artifact_strength", c.artifact_strength);
    c.seed = static_cast<std::uint64_t>(kv.get_int("seed", 0));
    c.validate();
    return c;
  }

  ordered_json to_json() const {
    ordered_json j;
    j["num_videos_per_class"] = num_videos_per_class;
    j["frames_per_video"] = frames_per_video;
    j["width"] = width;
    j["height"] = height;
    j["artifact_type"] = to_string(artifact_type);
    j["artifact_strength"] = artifact_strength;
    j["seed"] = seed;
    return j;
  }

  static FixtureConfig from_json(const ordered_json& j) {
    FixtureConfig c;
    c.num_videos_per_class = j.at("num_videos_per_class").get<int>();
    c.frames_per_video = j.at("frames_per_video").get<int>();
    c.width = j.at("width").get<int>();
    c.height = j.at("height").get<int>();
    c.artifact_type = parse_artifact_type(j.at("artifact_type").get<std::string>());
    c.artifact_strength = j.at("artifact_strength").get<double>();
    c.seed = j.at("seed").get<std::uint64_t>();
    return c;
  }
};

// ---------------------------------------------------------------------------
// Scene rendering

/// Interleaved RGB image in doubles on the 0..255 scale, before rounding.
struct SceneImage {
  int width = 0;
  int height = 0;
  std::vector<double> values;

  double& at(int y, int x, int c) { return values[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  double at(int y, int x, int c) const { return values[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
};

namespace detail {

inline constexpr int kMaxPan = 2;  // pixels per frame
inline constexpr std::array kOctaveSpacings{32, 16, 8, 4, 2, 1};

inline double lattice_value(std::uint64_t key, int octave, int ix, int iy) {
  const std::uint64_t h = mix_seed(mix_seed(mix_seed(key, static_cast<std::uint64_t>(octave)),
                                            static_cast<std::uint64_t>(static_cast<std::int64_t>(ix))),
                                   static_cast<std::uint64_t>(static_cast<std::int64_t>(iy)));
  return static_cast<double>(h >> 11) * 0x1.0p-52 - 1.0;  // [-1, 1)
}

inline int floor_div(int a, int b) { return a >= 0 ? a / b : -((-a + b - 1) / b); }

/// Static luminance canvas of the given size: sum over octaves of
/// smoothstep-interpolated lattice noise, amplitude = spacing / 32.
inline std::vector<double> value_noise_canvas(std::uint64_t key, int width, int height) {
  std::vector<double> canvas(static_cast<std::size_t>(width) * height, 0.0);
  for (std::size_t o = 0; o < kOctaveSpacings.size(); ++o) {
    const int s = kOctaveSpacings[o];
    const double amp = s / 32.0;
    const int gw = width / s + 2, gh = height / s + 2;
    std::vector<double> grid(static_cast<std::size_t>(gw) * gh);
    for (int gy = 0; gy < gh; ++gy)
      for (int gx = 0; gx < gw; ++gx) grid[static_cast<std::size_t>(gy) * gw + gx] = lattice_value(key, static_cast<int>(o), gx, gy);
    for (int y = 0; y < height; ++y) {
      const int gy = floor_div(y, s);
      double fy = static_cast<double>(y - gy * s) / s;
      fy = fy * fy * (3 - 2 * fy);
      for (int x = 0; x < width; ++x) {
        const int gx = floor_div(x, s);
        double fx = static_cast<double>(x - gx * s) / s;
        fx = fx * fx * (3 - 2 * fx);
        const double* g0 = &grid[static_cast<std::size_t>(gy) * gw + gx];
        const double* g1 = g0 + gw;
        const double top = g0[0] + (g0[1] - g0[0]) * fx;
        const double bot = g1[0] + (g1[1] - g1[0]) * fx;
        canvas[static_cast<std::size_t>(y) * width + x] += amp * (top + (bot - top) * fy);
      }
    }
  }
  return canvas;
}

}  // namespace detail

/// The clean scene frames shared by the real and fake video of `index`.
inline std::vector<SceneImage> render_scene(const FixtureConfig& cfg, int index) {
  const std::uint64_t video_key = mix_seed(cfg.seed, static_cast<std::uint64_t>(index));
  Rng rng(mix_seed(video_key, 0));
  const int pan_x = static_cast<int>(rng.below(2 * detail::kMaxPan + 1)) - detail::kMaxPan;
  const int pan_y = static_cast<int>(rng.below(3)) - 1;
  const double contrast = rng.uniform(25.0, 40.0);
  const double top = rng.uniform(140.0, 180.0), bottom = rng.uniform(70.0, 110.0);
  double tint[3], offset[3];
  for (int c = 0; c < 3; ++c) {
    tint[c] = rng.uniform(0.8, 1.2);
    offset[c] = rng.uniform(-15.0, 15.0);
  }

  const int margin_x = detail::kMaxPan * cfg.frames_per_video, margin_y = cfg.frames_per_video;
  const int cw = cfg.width + 2 * margin_x, ch = cfg.height + 2 * margin_y;
  const auto canvas = detail::value_noise_canvas(mix_seed(video_key, 1), cw, ch);

  std::vector<SceneImage> frames;
  frames.reserve(static_cast<std::size_t>(cfg.frames_per_video));
  for (int t = 0; t < cfg.frames_per_video; ++t) {
    Rng sensor(mix_seed(mix_seed(video_key, 2), static_cast<std::uint64_t>(t)));
    SceneImage img{cfg.width, cfg.height, std::vector<double>(static_cast<std::size_t>(cfg.width) * cfg.height * 3)};
    const int ox = margin_x + pan_x * t, oy = margin_y + pan_y * t;
    for (int y = 0; y < cfg.height; ++y) {
      const double gradient = top + (bottom - top) * (y + 0.5) / cfg.height;
      for (int x = 0; x < cfg.width; ++x) {
        const double lum = gradient + contrast * canvas[static_cast<std::size_t>(y + oy) * cw + (x + ox)] +
                           2.0 * sensor.normal();
        for (int c = 0; c < 3; ++c) img.at(y, x, c) = lum * tint[c] + offset[c];
      }
    }
    frames.push_back(std::move(img));
  }
  return frames;
}

/// Zero-mean deviations of the overlap count of a stride-2, kernel-3
/// transposed convolution, indexed by (y % 2) * 2 + (x % 2) and scaled to
/// a peak of 1.
inline constexpr std::array<double, 4> kCheckerboardPattern{1.0, -1.0 / 7.0, -1.0 / 7.0, -5.0 / 7.0};

inline void apply_artifact(SceneImage& img, ArtifactType type, double strength) {
  const int w = img.width, h = img.height;
  switch (type) {
    case ArtifactType::Checkerboard: {
      const double amp = strength * kCheckerboardAmplitude;
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
          const double d = amp * kCheckerboardPattern[static_cast<std::size_t>((y & 1) * 2 + (x & 1))];
          for (int c = 0; c < 3; ++c) img.at(y, x, c) += d;
        }
      break;
    }
    case ArtifactType::SpectralNotch: {
      const SceneImage src = img;
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          for (int c = 0; c < 3; ++c) {
            const double l = src.at(y, std::max(0, x - 1), c), m = src.at(y, x, c), r = src.at(y, std::min(w - 1, x + 1), c);
            const double high = m - 0.25 * (l + 2 * m + r);
            img.at(y, x, c) = m - strength * high;
          }
      break;
    }
    case ArtifactType::TextureSmoothing: {
      const SceneImage src = img;
      static constexpr double k[3] = {0.25, 0.5, 0.25};
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x)
          for (int c = 0; c < 3; ++c) {
            double blur = 0;
            for (int dy = -1; dy <= 1; ++dy)
              for (int dx = -1; dx <= 1; ++dx)
                blur += k[dy + 1] * k[dx + 1] *
                        src.at(std::clamp(y + dy, 0, h - 1), std::clamp(x + dx, 0, w - 1), c);
            img.at(y, x, c) = (1.0 - strength) * src.at(y, x, c) + strength * blur;
          }
      break;
    }
  }
}

inline RgbFrame quantize(const SceneImage& img) {
  RgbFrame f;
  f.width = img.width;
  f.height = img.height;
  f.data.resize(img.values.size());
  for (std::size_t i = 0; i < img.values.size(); ++i)
    f.data[i] = static_cast<std::uint8_t>(std::clamp(std::lround(img.values[i]), 0L, 255L));
  return f;
}

/// Frames of the real or fake video with the given index. Strength is
/// taken as given here so callers can probe the zero-strength limit.
inline std::vector<RgbFrame> render_video(const FixtureConfig& cfg, int index, Label label) {
  auto scene = render_scene(cfg, index);
  std::vector<RgbFrame> out;
  out.reserve(scene.size());
  for (auto& img : scene) {
    if (label == Label::Fake) apply_artifact(img, cfg.artifact_type, cfg.artifact_strength);
    out.push_back(quantize(img));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Spectral statistics

/// Mean power of the mean-removed luminance over frequency bins whose
/// normalized radius is at least `min_radius`. The radius of bin (u, v) is
/// sqrt((2u/H)^2 + (2v/W)^2) / sqrt(2) with signed frequencies, so it runs
/// from 0 at DC to 1 at the (Nyquist, Nyquist) corner.
inline double high_frequency_energy(const RgbFrame& frame, double min_radius = 0.75) {
  const int h = frame.height, w = frame.width;
  std::vector<std::complex<double>> grid(static_cast<std::size_t>(h) * w);
  double mean = 0;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const double l = (frame.at(y, x, 0) + frame.at(y, x, 1) + frame.at(y, x, 2)) / 3.0;
      grid[static_cast<std::size_t>(y) * w + x] = l;
      mean += l;
    }
  mean /= static_cast<double>(h) * w;
  for (auto& v : grid) v -= mean;

  Eigen::FFT<double> fft;
  std::vector<std::complex<double>> in, out;
  for (int y = 0; y < h; ++y) {
    in.assign(grid.begin() + static_cast<std::ptrdiff_t>(y) * w, grid.begin() + static_cast<std::ptrdiff_t>(y + 1) * w);
    fft.fwd(out, in);
    std::copy(out.begin(), out.end(), grid.begin() + static_cast<std::ptrdiff_t>(y) * w);
  }
  in.resize(static_cast<std::size_t>(h));
  for (int x = 0; x < w; ++x) {
    for (int y = 0; y < h; ++y) in[static_cast<std::size_t>(y)] = grid[static_cast<std::size_t>(y) * w + x];
    fft.fwd(out, in);
    for (int y = 0; y < h; ++y) grid[static_cast<std::size_t>(y) * w + x] = out[static_cast<std::size_t>(y)];
  }

  double sum = 0;
  long long bins = 0;
  for (int u = 0; u < h; ++u) {
    const double fu = 2.0 * (u <= h / 2 ? u : u - h) / h;
    for (int v = 0; v < w; ++v) {
      const double fv = 2.0 * (v <= w / 2 ? v : v - w) / w;
      if (std::sqrt((fu * fu + fv * fv) / 2.0) >= min_radius) {
        sum += std::norm(grid[static_cast<std::size_t>(u) * w + v]);
        ++bins;
      }
    }
  }
  return bins ? sum / static_cast<double>(bins) : 0.0;
}

struct FixtureStatistics {
  double high_frequency_energy_real = 0;
  double high_frequency_energy_fake = 0;
  double high_frequency_energy_ratio = 0;
  double mean_intensity_real = 0;
  double mean_intensity_fake = 0;
};

// ---------------------------------------------------------------------------
// Generation and provenance

inline constexpr std::string_view kFixtureProvenancePrefix = "deepstreets-synthgen ";

inline std::string fixture_video_id(const FixtureConfig& cfg, Label label, int index) {
  char idx[16];
  std::snprintf(idx, sizeof idx, "%03d", index);
  return "synthetic-" + std::string(to_string(cfg.artifact_type)) + "-s" + std::to_string(cfg.seed) + "-" +
         std::string(to_string(label)) + "-" + idx;
}

/// Checksum over the identity and label of every record, in order.
inline std::string fixture_checksum(const DatasetManifest& m) {
  std::uint64_t h = fnv1a64("");
  for (const auto& r : m.records) {
    h = fnv1a64(r.video_id, h);
    h = fnv1a64("\t", h);
    h = fnv1a64(to_string(r.label), h);
    h = fnv1a64("\n", h);
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

/// Writes `real/<id>.mkv`, `fake/<id>.mkv` and `manifest.jsonl` under `out`.
/// Videos are lossless; content depends only on (config, video index).
inline DatasetManifest generate_fixture(const FixtureConfig& cfg, const std::filesystem::path& out) {
  cfg.validate();
  std::filesystem::create_directories(out / "real");
  std::filesystem::create_directories(out / "fake");

  DatasetManifest m;
  m.base_dir = out;
  FixtureStatistics stats;
  const int stat_frame = cfg.frames_per_video / 2;
  for (int i = 0; i < cfg.num_videos_per_class; ++i) {
    const auto scene = render_scene(cfg, i);
    for (Label label : {Label::Real, Label::Fake}) {
      std::vector<RgbFrame> frames;
      frames.reserve(scene.size());
      for (auto img : scene) {
        if (label == Label::Fake) apply_artifact(img, cfg.artifact_type, cfg.artifact_strength);
        frames.push_back(quantize(img));
      }
      VideoRecord r;
      r.video_id = fixture_video_id(cfg, label, i);
      r.path = std::string(to_string(label)) + "/" + r.video_id + ".mkv";
      r.sub_dataset = SubDataset::Synthetic;
      r.label = label;
      r.quality = Quality::Raw;
      r.frame_count = cfg.frames_per_video;
      r.width = cfg.width;
      r.height = cfg.height;
      r.fps = kFixtureFps;
      write_lossless_video(out / r.path, frames, kFixtureFps);
      m.records.push_back(std::move(r));

      const auto& f = frames[static_cast<std::size_t>(stat_frame)];
      double mean = 0;
      for (auto v : f.data) mean += v;
      mean /= static_cast<double>(f.data.size());
      const double hf = high_frequency_energy(f);
      (label == Label::Real ? stats.high_frequency_energy_real : stats.high_frequency_energy_fake) += hf;
      (label == Label::Real ? stats.mean_intensity_real : stats.mean_intensity_fake) += mean;
    }
  }
  const double n = cfg.num_videos_per_class;
  stats.high_frequency_energy_real /= n;
  stats.high_frequency_energy_fake /= n;
  stats.mean_intensity_real /= n;
  stats.mean_intensity_fake /= n;
  stats.high_frequency_energy_ratio =
      stats.high_frequency_energy_real > 0 ? stats.high_frequency_energy_fake / stats.high_frequency_energy_real : 0.0;

  ordered_json prov;
  prov["config"] = cfg.to_json();
  prov["fps"] = kFixtureFps;
  prov["statistics"] = {{"high_frequency_energy_real", stats.high_frequency_energy_real},
                        {"high_frequency_energy_fake", stats.high_frequency_energy_fake},
                        {"high_frequency_energy_ratio", stats.high_frequency_energy_ratio},
                        {"mean_intensity_real", stats.mean_intensity_real},
                        {"mean_intensity_fake", stats.mean_intensity_fake}};
  prov["checksum"] = fixture_checksum(m);
  m.source_description = std::string(kFixtureProvenancePrefix) + prov.dump();
  save_manifest(m, out / "manifest.jsonl");
  return m;
}

struct FixtureProvenance {
  FixtureConfig config;
  FixtureStatistics statistics;
  std::string checksum;
};

/// Recovers and verifies the provenance embedded in a fixture manifest.
inline FixtureProvenance fixture_provenance(const DatasetManifest& m) {
  if (m.source_description.rfind(kFixtureProvenancePrefix, 0) != 0)
    throw DataError("manifest was not produced by the fixture generator");
  ordered_json j;
  try {
    j = ordered_json::parse(m.source_description.substr(kFixtureProvenancePrefix.size()));
  } catch (const std::exception& e) {
    throw DataError(std::string("fixture provenance is unreadable: ") + e.what());
  }
  FixtureProvenance p;
  p.config = FixtureConfig::from_json(j.at("config"));
  const auto& s = j.at("statistics");
  p.statistics = {s.at("high_frequency_energy_real").get<double>(), s.at("high_frequency_energy_fake").get<double>(),
                  s.at("high_frequency_energy_ratio").get<double>(), s.at("mean_intensity_real").get<double>(),
                  s.at("mean_intensity_fake").get<double>()};
  p.checksum = j.at("checksum").get<std::string>();
  const auto actual = fixture_checksum(m);
  if (actual != p.checksum)
    throw DataError("fixture checksum mismatch: recorded " + p.checksum + ", manifest gives " + actual);
  return p;
}

inline std::string describe_fixture(const DatasetManifest& m) {
  const auto p = fixture_provenance(m);
  std::size_t real = 0;
  for (const auto& r : m.records) real += r.label == Label::Real;
  auto num = [](double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return std::string(buf);
  };
  std::string out = "synthetic fixture\n";
  out += "num_videos_per_class: " + std::to_string(p.config.num_videos_per_class) + "\n";
  out += "frames_per_video: " + std::to_string(p.config.frames_per_video) + "\n";
  out += "width: " + std::to_string(p.config.width) + "\n";
  out += "height: " + std::to_string(p.config.height) + "\n";
  out += "artifact_type: " + std::string(to_string(p.config.artifact_type)) + "\n";
  out += "artifact_strength: " + num(p.config.artifact_strength) + "\n";
  out += "seed: " + std::to_string(p.config.seed) + "\n";
  out += "fps: " + num(kFixtureFps) + "\n";
  out += "videos: " + std::to_string(m.records.size()) + " (" + std::to_string(real) + " real, " +
         std::to_string(m.records.size() - real) + " fake)\n";
  out += "checksum: verified\n";
  out += "statistics:\n";
  out += "  high_frequency_energy_real: " + num(p.statistics.high_frequency_energy_real) + "\n";
  out += "  high_frequency_energy_fake: " + num(p.statistics.high_frequency_energy_fake) + "\n";
  out += "  high_frequency_energy_ratio: " + num(p.statistics.high_frequency_energy_ratio) + "\n";
  out += "  mean_intensity_real: " + num(p.statistics.mean_intensity_real) + "\n";
  out += "  mean_intensity_fake: " + num(p.statistics.mean_intensity_fake) + "\n";
  return out;
}

}  // namespace deepstreets
