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

// Video codec harness and frame pipeline.
//
// RAW videos are stored losslessly (FFV1, bgr0, Matroska). HQ and LQ are
// H.264 (libx264) in constant-rate-factor mode with 4:2:0 chroma, CRF 23
// and 40 respectively, in MP4. Encoders run single-threaded with bit-exact
// muxing so that identical inputs give identical bytes.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

extern "C" {
#include <libavcodec/avcodec.h>
#include <libavformat/avformat.h>
#include <libavutil/imgutils.h>
#include <libavutil/opt.h>
#include <libswscale/swscale.h>
}

#include "deepstreets/common.hpp"
#include "deepstreets/records.hpp"

namespace deepstreets {

struct QualityLevel {
  Quality name = Quality::Raw;
  std::optional<int> rate_parameter;
};

inline QualityLevel quality_level(Quality q) {
  switch (q) {
    case Quality::Raw: return {Quality::Raw, std::nullopt};
    case Quality::HQ: return {Quality::HQ, 23};
    case Quality::LQ: return {Quality::LQ, 40};
  }
  return {};
}

/// 8-bit interleaved RGB, row-major.
struct RgbFrame {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  RgbFrame() = default;
  RgbFrame(int w, int h) : width(w), height(h), data(static_cast<std::size_t>(w) * h * 3, 0) {}

  std::uint8_t& at(int y, int x, int c) { return data[(static_cast<std::size_t>(y) * width + x) * 3 + c]; }
  std::uint8_t at(int y, int x, int c) const {
    return data[(static_cast<std::size_t>(y) * width + x) * 3 + c];
  }
  bool operator==(const RgbFrame&) const = default;
};

inline constexpr int kNetworkInputHeight = 256;
inline constexpr int kNetworkInputWidth = 512;
inline constexpr float kNormalizedMin = -1.0f;
inline constexpr float kNormalizedMax = 1.0f;

/// Preprocessed frame, H x W x C interleaved, values in [-1, 1].
struct FrameTensor {
  int height = 0;
  int width = 0;
  int channels = 3;
  std::vector<float> values;
  std::string video_id;
  int frame_index = 0;
};

struct VideoProbe {
  int frame_count = 0;
  int width = 0;
  int height = 0;
  double fps = 0.0;
  std::string codec;
};

namespace detail {

struct FormatInputDeleter {
  void operator()(AVFormatContext* p) const { avformat_close_input(&p); }
};
struct FormatOutputDeleter {
  void operator()(AVFormatContext* p) const {
    if (p->pb) avio_closep(&p->pb);
    avformat_free_context(p);
  }
};
struct CodecContextDeleter {
  void operator()(AVCodecContext* p) const { avcodec_free_context(&p); }
};
struct FrameDeleter {
  void operator()(AVFrame* p) const { av_frame_free(&p); }
};
struct PacketDeleter {
  void operator()(AVPacket* p) const { av_packet_free(&p); }
};
struct SwsDeleter {
  void operator()(SwsContext* p) const { sws_freeContext(p); }
};

using InputFormatPtr = std::unique_ptr<AVFormatContext, FormatInputDeleter>;
using OutputFormatPtr = std::unique_ptr<AVFormatContext, FormatOutputDeleter>;
using CodecContextPtr = std::unique_ptr<AVCodecContext, CodecContextDeleter>;
using FramePtr = std::unique_ptr<AVFrame, FrameDeleter>;
using PacketPtr = std::unique_ptr<AVPacket, PacketDeleter>;
using SwsPtr = std::unique_ptr<SwsContext, SwsDeleter>;

inline std::string av_error_string(int err) {
  char buf[AV_ERROR_MAX_STRING_SIZE] = {0};
  av_strerror(err, buf, sizeof(buf));
  return buf;
}

// libav logs through a process-global callback. Once a LogCapture has been
// created, warnings and errors go to a bounded buffer (reset per capture)
// instead of stderr so encoder failures can carry them in the message.
inline std::mutex& log_mutex() {
  static std::mutex m;
  return m;
}
inline std::string& log_buffer() {
  static std::string buffer;
  return buffer;
}

inline void capture_callback(void* avcl, int level, const char* fmt, va_list vl) {
  if (level > AV_LOG_WARNING) return;
  char line[1024];
  int print_prefix = 1;
  av_log_format_line2(avcl, level, fmt, vl, line, sizeof(line), &print_prefix);
  std::lock_guard lock(log_mutex());
  auto& buf = log_buffer();
  if (buf.size() < 16384) buf += line;
}

class LogCapture {
 public:
  LogCapture() {
    {
      std::lock_guard lock(log_mutex());
      log_buffer().clear();
    }
    av_log_set_callback(capture_callback);
  }
  ~LogCapture() = default;
  LogCapture(const LogCapture&) = delete;
  LogCapture& operator=(const LogCapture&) = delete;

  std::string text() const {
    std::lock_guard lock(log_mutex());
    return log_buffer();
  }
};

inline void rgb_to_bgr0(const RgbFrame& src, AVFrame* dst) {
  for (int y = 0; y < src.height; ++y) {
    std::uint8_t* row = dst->data[0] + static_cast<std::ptrdiff_t>(y) * dst->linesize[0];
    for (int x = 0; x < src.width; ++x) {
      row[4 * x + 0] = src.at(y, x, 2);
      row[4 * x + 1] = src.at(y, x, 1);
      row[4 * x + 2] = src.at(y, x, 0);
      row[4 * x + 3] = 0;
    }
  }
}

}  // namespace detail

/// Lossless or H.264 target for VideoWriter.
struct EncoderSettings {
  bool lossless = true;
  int crf = 23;
  std::string preset = "medium";
};

/// Streaming encoder. Frames must all share the size given at construction.
class VideoWriter {
 public:
  VideoWriter(const std::filesystem::path& path, int width, int height, double fps,
              EncoderSettings settings = {})
      : path_(path), width_(width), height_(height), settings_(settings) {
    if (width < 1 || height < 1) throw DataError("video writer: empty frame size");
    if (!settings.lossless && (width % 2 || height % 2))
      throw DataError("H.264 4:2:0 encoding requires even dimensions, got " + std::to_string(width) +
                      "x" + std::to_string(height));
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());

    AVFormatContext* raw_fmt = nullptr;
    int err = avformat_alloc_output_context2(&raw_fmt, nullptr, nullptr, path.string().c_str());
    if (err < 0 || !raw_fmt) throw DataError("cannot pick a container for " + path.string());
    fmt_.reset(raw_fmt);
    fmt_->flags |= AVFMT_FLAG_BITEXACT;

    const char* encoder_name = settings.lossless ? "ffv1" : "libx264";
    const AVCodec* codec = avcodec_find_encoder_by_name(encoder_name);
    if (!codec) throw RuntimeFailure(std::string("encoder unavailable: ") + encoder_name);

    stream_ = avformat_new_stream(fmt_.get(), nullptr);
    ctx_.reset(avcodec_alloc_context3(codec));
    AVRational rate = av_d2q(fps, 100000);
    ctx_->width = width;
    ctx_->height = height;
    ctx_->framerate = rate;
    ctx_->time_base = av_inv_q(rate);
    ctx_->pix_fmt = settings.lossless ? AV_PIX_FMT_BGR0 : AV_PIX_FMT_YUV420P;
    ctx_->thread_count = 1;
    ctx_->flags |= AV_CODEC_FLAG_BITEXACT;
    if (fmt_->oformat->flags & AVFMT_GLOBALHEADER) ctx_->flags |= AV_CODEC_FLAG_GLOBAL_HEADER;
    if (!settings.lossless) {
      av_opt_set(ctx_->priv_data, "crf", std::to_string(settings.crf).c_str(), 0);
      av_opt_set(ctx_->priv_data, "preset", settings.preset.c_str(), 0);
    }
    if ((err = avcodec_open2(ctx_.get(), codec, nullptr)) < 0)
      throw RuntimeFailure("cannot open encoder: " + detail::av_error_string(err) + "\n" + capture_.text());
    avcodec_parameters_from_context(stream_->codecpar, ctx_.get());
    stream_->time_base = ctx_->time_base;
    stream_->avg_frame_rate = rate;

    if ((err = avio_open(&fmt_->pb, path.string().c_str(), AVIO_FLAG_WRITE)) < 0)
      throw DataError("cannot open " + path.string() + " for writing: " + detail::av_error_string(err));
    if ((err = avformat_write_header(fmt_.get(), nullptr)) < 0)
      throw RuntimeFailure("cannot write container header: " + detail::av_error_string(err));

    frame_.reset(av_frame_alloc());
    frame_->format = ctx_->pix_fmt;
    frame_->width = width;
    frame_->height = height;
    if (av_frame_get_buffer(frame_.get(), 0) < 0) throw RuntimeFailure("frame allocation failed");
    packet_.reset(av_packet_alloc());
    if (!settings.lossless) {
      sws_.reset(sws_getContext(width, height, AV_PIX_FMT_RGB24, width, height, AV_PIX_FMT_YUV420P,
                                SWS_BILINEAR | SWS_ACCURATE_RND | SWS_BITEXACT, nullptr, nullptr,
                                nullptr));
      if (!sws_) throw RuntimeFailure("cannot create color converter");
    }
  }

  VideoWriter(const VideoWriter&) = delete;
  VideoWriter& operator=(const VideoWriter&) = delete;

  ~VideoWriter() {
    if (!finished_) {
      try {
        finish();
      } catch (...) {
      }
    }
  }

  void write(const RgbFrame& f) {
    if (f.width != width_ || f.height != height_)
      throw DataError("video writer: frame size changed mid-stream");
    if (av_frame_make_writable(frame_.get()) < 0) throw RuntimeFailure("frame not writable");
    if (settings_.lossless) {
      detail::rgb_to_bgr0(f, frame_.get());
    } else {
      const std::uint8_t* src[1] = {f.data.data()};
      const int stride[1] = {3 * f.width};
      sws_scale(sws_.get(), src, stride, 0, f.height, frame_->data, frame_->linesize);
    }
    frame_->pts = next_pts_++;
    send(frame_.get());
  }

  void finish() {
    if (finished_) return;
    finished_ = true;
    send(nullptr);
    int err = av_write_trailer(fmt_.get());
    avio_closep(&fmt_->pb);
    if (err < 0) throw RuntimeFailure("cannot finalize " + path_.string());
  }

  int frames_written() const { return static_cast<int>(next_pts_); }
  std::string diagnostics() const { return capture_.text(); }

 private:
  void send(AVFrame* f) {
    int err = avcodec_send_frame(ctx_.get(), f);
    if (err < 0)
      throw RuntimeFailure("encoder rejected frame: " + detail::av_error_string(err) + "\n" + capture_.text());
    for (;;) {
      err = avcodec_receive_packet(ctx_.get(), packet_.get());
      if (err == AVERROR(EAGAIN) || err == AVERROR_EOF) break;
      if (err < 0)
        throw RuntimeFailure("encoder failure: " + detail::av_error_string(err) + "\n" + capture_.text());
      av_packet_rescale_ts(packet_.get(), ctx_->time_base, stream_->time_base);
      packet_->stream_index = stream_->index;
      err = av_interleaved_write_frame(fmt_.get(), packet_.get());
      if (err < 0) throw RuntimeFailure("muxer failure: " + detail::av_error_string(err));
    }
  }

  std::filesystem::path path_;
  int width_;
  int height_;
  EncoderSettings settings_;
  detail::LogCapture capture_;
  detail::OutputFormatPtr fmt_;
  detail::CodecContextPtr ctx_;
  detail::FramePtr frame_;
  detail::PacketPtr packet_;
  detail::SwsPtr sws_;
  AVStream* stream_ = nullptr;
  std::int64_t next_pts_ = 0;
  bool finished_ = false;
};

/// Sequential decoder yielding RGB frames in presentation order.
class VideoReader {
 public:
  explicit VideoReader(const std::filesystem::path& path) : path_(path) {
    AVFormatContext* raw = nullptr;
    int err = avformat_open_input(&raw, path.string().c_str(), nullptr, nullptr);
    if (err < 0) throw DataError("cannot open video " + path.string() + ": " + detail::av_error_string(err));
    fmt_.reset(raw);
    if ((err = avformat_find_stream_info(fmt_.get(), nullptr)) < 0)
      throw DataError("cannot read stream info of " + path.string());
    stream_index_ = av_find_best_stream(fmt_.get(), AVMEDIA_TYPE_VIDEO, -1, -1, nullptr, 0);
    const AVCodec* dec =
        stream_index_ >= 0 ? avcodec_find_decoder(fmt_->streams[stream_index_]->codecpar->codec_id) : nullptr;
    if (stream_index_ < 0 || !dec) throw DataError("no decodable video stream in " + path.string());
    ctx_.reset(avcodec_alloc_context3(dec));
    avcodec_parameters_to_context(ctx_.get(), fmt_->streams[stream_index_]->codecpar);
    ctx_->thread_count = 1;
    if ((err = avcodec_open2(ctx_.get(), dec, nullptr)) < 0)
      throw DataError("cannot open decoder for " + path.string());
    packet_.reset(av_packet_alloc());
    frame_.reset(av_frame_alloc());
  }

  /// Returns false at end of stream.
  bool next(RgbFrame& out) {
    for (;;) {
      int err = avcodec_receive_frame(ctx_.get(), frame_.get());
      if (err == 0) {
        convert(out);
        ++decoded_;
        return true;
      }
      if (err == AVERROR_EOF) return false;
      if (err != AVERROR(EAGAIN)) fail(err);
      if (flushing_) return false;
      err = av_read_frame(fmt_.get(), packet_.get());
      if (err == AVERROR_EOF) {
        flushing_ = true;
        avcodec_send_packet(ctx_.get(), nullptr);
        continue;
      }
      if (err < 0) fail(err);
      if (packet_->stream_index == stream_index_) {
        err = avcodec_send_packet(ctx_.get(), packet_.get());
        av_packet_unref(packet_.get());
        if (err < 0 && err != AVERROR(EAGAIN)) fail(err);
      } else {
        av_packet_unref(packet_.get());
      }
    }
  }

  int frames_decoded() const { return decoded_; }

 private:
  [[noreturn]] void fail(int err) const {
    throw DataError("decode failure at frame " + std::to_string(decoded_) + " of " + path_.string() + ": " +
                    detail::av_error_string(err));
  }

  void convert(RgbFrame& out) {
    const int w = frame_->width;
    const int h = frame_->height;
    if (out.width != w || out.height != h) out = RgbFrame(w, h);
    const auto fmt = static_cast<AVPixelFormat>(frame_->format);
    if (fmt == AV_PIX_FMT_BGR0 || fmt == AV_PIX_FMT_BGRA) {
      for (int y = 0; y < h; ++y) {
        const std::uint8_t* row = frame_->data[0] + static_cast<std::ptrdiff_t>(y) * frame_->linesize[0];
        for (int x = 0; x < w; ++x) {
          out.at(y, x, 0) = row[4 * x + 2];
          out.at(y, x, 1) = row[4 * x + 1];
          out.at(y, x, 2) = row[4 * x + 0];
        }
      }
      return;
    }
    if (fmt == AV_PIX_FMT_RGB24) {
      for (int y = 0; y < h; ++y)
        std::copy_n(frame_->data[0] + static_cast<std::ptrdiff_t>(y) * frame_->linesize[0], 3 * w,
                    out.data.data() + static_cast<std::size_t>(y) * 3 * w);
      return;
    }
    sws_.reset(sws_getCachedContext(sws_.release(), w, h, fmt, w, h, AV_PIX_FMT_RGB24,
                                    SWS_BILINEAR | SWS_ACCURATE_RND | SWS_BITEXACT | SWS_FULL_CHR_H_INT,
                                    nullptr, nullptr, nullptr));
    if (!sws_) throw DataError("unsupported pixel format in " + path_.string());
    std::uint8_t* dst[1] = {out.data.data()};
    const int stride[1] = {3 * w};
    sws_scale(sws_.get(), frame_->data, frame_->linesize, 0, h, dst, stride);
  }

  detail::LogCapture capture_;
  std::filesystem::path path_;
  detail::InputFormatPtr fmt_;
  detail::CodecContextPtr ctx_;
  detail::PacketPtr packet_;
  detail::FramePtr frame_;
  detail::SwsPtr sws_;
  int stream_index_ = -1;
  int decoded_ = 0;
  bool flushing_ = false;
};

/// Container-level metadata; frame count is the number of video packets
/// (one per frame for every codec this toolkit writes), so no decoding.
inline VideoProbe probe_video(const std::filesystem::path& path) {
  AVFormatContext* raw = nullptr;
  if (avformat_open_input(&raw, path.string().c_str(), nullptr, nullptr) < 0)
    throw DataError("cannot open video " + path.string());
  detail::InputFormatPtr fmt(raw);
  if (avformat_find_stream_info(fmt.get(), nullptr) < 0)
    throw DataError("cannot read stream info of " + path.string());
  int idx = av_find_best_stream(fmt.get(), AVMEDIA_TYPE_VIDEO, -1, -1, nullptr, 0);
  if (idx < 0) throw DataError("no video stream in " + path.string());
  const AVStream* st = fmt->streams[idx];
  VideoProbe probe;
  probe.width = st->codecpar->width;
  probe.height = st->codecpar->height;
  AVRational rate = st->avg_frame_rate.num ? st->avg_frame_rate : st->r_frame_rate;
  probe.fps = rate.den ? av_q2d(rate) : 0.0;
  probe.codec = avcodec_get_name(st->codecpar->codec_id);
  detail::PacketPtr pkt(av_packet_alloc());
  while (av_read_frame(fmt.get(), pkt.get()) >= 0) {
    if (pkt->stream_index == idx) ++probe.frame_count;
    av_packet_unref(pkt.get());
  }
  return probe;
}

inline std::vector<RgbFrame> read_all_frames(const std::filesystem::path& path) {
  VideoReader reader(path);
  std::vector<RgbFrame> frames;
  RgbFrame f;
  while (reader.next(f)) frames.push_back(f);
  return frames;
}

/// Decodes every frame of a manifest record, checking the recorded count.
inline std::vector<RgbFrame> extract_frames(const VideoRecord& record, const std::filesystem::path& resolved_path) {
  auto frames = read_all_frames(resolved_path);
  if (static_cast<int>(frames.size()) != record.frame_count)
    throw DataError("video " + record.video_id + ": decoded " + std::to_string(frames.size()) +
                    " frames, record says " + std::to_string(record.frame_count));
  return frames;
}

inline std::vector<RgbFrame> extract_frames(const VideoRecord& record) {
  return extract_frames(record, record.path);
}

inline void write_lossless_video(const std::filesystem::path& path, std::span<const RgbFrame> frames, double fps) {
  if (frames.empty()) throw DataError("refusing to write an empty video");
  VideoWriter writer(path, frames.front().width, frames.front().height, fps, EncoderSettings{.lossless = true});
  for (const auto& f : frames) writer.write(f);
  writer.finish();
}

/// Re-encodes `input` as H.264 at the level's rate factor. Frame count,
/// resolution and frame rate are preserved and verified.
inline VideoRecord compress_video(const std::filesystem::path& input, const QualityLevel& level,
                                  const std::filesystem::path& output) {
  if (level.name == Quality::Raw || !level.rate_parameter)
    throw DataError("RAW is not an encoding target");
  const int crf = *level.rate_parameter;
  if (crf < 0 || crf > 51) throw DataError("rate parameter out of range [0, 51]: " + std::to_string(crf));

  const auto src = probe_video(input);
  VideoReader reader(input);
  std::optional<VideoWriter> writer;
  RgbFrame f;
  while (reader.next(f)) {
    if (!writer) writer.emplace(output, f.width, f.height, src.fps, EncoderSettings{.lossless = false, .crf = crf});
    writer->write(f);
  }
  if (!writer) throw DataError("no frames decoded from " + input.string());
  const int written = writer->frames_written();
  writer->finish();

  const auto out = probe_video(output);
  if (out.frame_count != written || written != src.frame_count)
    throw RuntimeFailure("frame count mismatch after encoding " + input.string() + ": input " +
                         std::to_string(src.frame_count) + ", output " + std::to_string(out.frame_count));
  if (out.width != src.width || out.height != src.height)
    throw RuntimeFailure("resolution changed while encoding " + input.string());

  VideoRecord r;
  r.video_id = output.stem().string();
  r.path = output.string();
  r.quality = level.name;
  r.frame_count = out.frame_count;
  r.width = out.width;
  r.height = out.height;
  r.fps = out.fps;
  r.encoding = EncodingInfo{"h264", "crf", crf, "yuv420p"};
  return r;
}

// ---------------------------------------------------------------------------
// Preprocessing

/// Bilinear resampling with half-pixel centers and edge clamping; no
/// antialiasing. Output is interleaved doubles in the source's 0..255 scale.
inline std::vector<double> resize_bilinear(const RgbFrame& src, int out_h, int out_w) {
  std::vector<double> out(static_cast<std::size_t>(out_h) * out_w * 3);
  const double sy = static_cast<double>(src.height) / out_h;
  const double sx = static_cast<double>(src.width) / out_w;
  struct Tap {
    int i0, i1;
    double t;
  };
  auto taps = [](int n_out, int n_in, double scale) {
    std::vector<Tap> t(static_cast<std::size_t>(n_out));
    for (int o = 0; o < n_out; ++o) {
      double pos = (o + 0.5) * scale - 0.5;
      pos = std::clamp(pos, 0.0, static_cast<double>(n_in - 1));
      int i0 = static_cast<int>(std::floor(pos));
      int i1 = std::min(i0 + 1, n_in - 1);
      t[static_cast<std::size_t>(o)] = {i0, i1, pos - i0};
    }
    return t;
  };
  const auto ty = taps(out_h, src.height, sy);
  const auto tx = taps(out_w, src.width, sx);
  for (int y = 0; y < out_h; ++y) {
    const auto& a = ty[static_cast<std::size_t>(y)];
    for (int x = 0; x < out_w; ++x) {
      const auto& b = tx[static_cast<std::size_t>(x)];
      for (int c = 0; c < 3; ++c) {
        // Lerp form keeps constant regions exactly constant.
        const double p00 = src.at(a.i0, b.i0, c), p01 = src.at(a.i0, b.i1, c);
        const double p10 = src.at(a.i1, b.i0, c), p11 = src.at(a.i1, b.i1, c);
        const double top = p00 + b.t * (p01 - p00);
        const double bottom = p10 + b.t * (p11 - p10);
        out[(static_cast<std::size_t>(y) * out_w + x) * 3 + c] = top + a.t * (bottom - top);
      }
    }
  }
  return out;
}

/// Maps 0..255 linearly onto [-1, 1].
inline double normalize_pixel(double v) { return v / 127.5 - 1.0; }

inline FrameTensor preprocess_frame(const RgbFrame& frame, int out_h = kNetworkInputHeight,
                                    int out_w = kNetworkInputWidth) {
  if (frame.width < 1 || frame.height < 1) throw DataError("preprocess_frame: empty frame");
  if (frame.data.size() != static_cast<std::size_t>(frame.width) * frame.height * 3)
    throw DataError("preprocess_frame: expected 3 interleaved channels");
  auto resized = resize_bilinear(frame, out_h, out_w);
  FrameTensor t;
  t.height = out_h;
  t.width = out_w;
  t.values.resize(resized.size());
  for (std::size_t i = 0; i < resized.size(); ++i)
    t.values[i] = std::clamp(static_cast<float>(normalize_pixel(resized[i])), kNormalizedMin, kNormalizedMax);
  return t;
}

/// Overload for frames arriving as raw interleaved bytes with an explicit
/// channel count; anything other than 3 channels is rejected.
inline FrameTensor preprocess_frame(std::span<const std::uint8_t> pixels, int width, int height, int channels,
                                    int out_h = kNetworkInputHeight, int out_w = kNetworkInputWidth) {
  if (channels != 3) throw DataError("preprocess_frame: expected 3 channels, got " + std::to_string(channels));
  if (pixels.size() != static_cast<std::size_t>(width) * height * 3)
    throw DataError("preprocess_frame: buffer size does not match dimensions");
  RgbFrame f(width, height);
  std::copy(pixels.begin(), pixels.end(), f.data.begin());
  return preprocess_frame(f, out_h, out_w);
}

}  // namespace deepstreets
