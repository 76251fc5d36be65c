// Copyright 2026 The lesionseg Authors
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
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "lesionseg/error.hpp"
#include "lesionseg/image.hpp"
#include "lesionseg/png_io.hpp"
#include "lesionseg/subprocess.hpp"

namespace lesionseg {

struct VideoInfo {
  int width = 0;
  int height = 0;
  double fps = 25.0;      // endoscope default when the source reports none
  std::int64_t frame_count = 0;  // 0 when unknown before a full decode

  friend bool operator==(const VideoInfo&, const VideoInfo&) = default;
};

enum class IoMode { video, frame_directory };

inline IoMode parse_io_mode(const std::string& s) {
  if (s == "video") return IoMode::video;
  if (s == "frame_directory") return IoMode::frame_directory;
  raise(errc::config_error, "unknown io mode '" + s + "'");
}

inline const char* to_string(IoMode mode) {
  return mode == IoMode::video ? "video" : "frame_directory";
}

/// Shell command templates for the external transcoder. The decoder must
/// emit headerless frame-major RGB24; the encoder consumes the same stream.
/// Placeholders: {input}, {output}, {width}, {height}, {fps}.
struct TranscoderTemplates {
  std::string probe =
      "ffprobe -v error -select_streams v:0 "
      "-show_entries stream=width,height,avg_frame_rate,nb_frames "
      "-of default=noprint_wrappers=1 {input}";
  std::string decode =
      "ffmpeg -v error -nostdin -i {input} -f rawvideo -pix_fmt rgb24 -";
  std::string encode =
      "ffmpeg -v error -nostdin -y -f rawvideo -pix_fmt rgb24 "
      "-s {width}x{height} -r {fps} -i - -pix_fmt yuv420p {output}";
};

class FrameSource {
 public:
  virtual ~FrameSource() = default;
  virtual const VideoInfo& info() const = 0;
  /// Next frame with consecutive indices from 0, or nothing at end of stream.
  virtual std::optional<Frame> next() = 0;
};

class FrameSink {
 public:
  virtual ~FrameSink() = default;
  virtual void write(const Frame& frame) = 0;
  /// Flushes and closes the output; must be called to obtain a valid result.
  virtual void finalize() = 0;
};

/// Smallest frame geometry treated as real video.
inline constexpr int kMinFrameSide = 16;

inline void validate_video_info(const VideoInfo& info) {
  if (info.width < kMinFrameSide || info.height < kMinFrameSide)
    raise(errc::decode_failure,
          "frame dimensions " + std::to_string(info.width) + "x" +
              std::to_string(info.height) + " below the " +
              std::to_string(kMinFrameSide) + " px minimum");
  if (!(info.fps > 0)) raise(errc::decode_failure, "fps must be positive");
}

namespace detail {

inline std::string format_fps(double fps) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%g", fps);
  return buf;
}

inline std::string frame_file_name(std::int64_t index) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%06lld.png", static_cast<long long>(index));
  return buf;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Directory mode: lossless PNG frames, the canonical test path.
// ---------------------------------------------------------------------------

class DirectoryFrameSource final : public FrameSource {
 public:
  explicit DirectoryFrameSource(const std::filesystem::path& dir,
                                double default_fps = 25.0) {
    namespace fs = std::filesystem;
    if (!fs::exists(dir)) raise(errc::not_found, dir.string() + " does not exist");
    if (!fs::is_directory(dir))
      raise(errc::not_found, dir.string() + " is not a directory");
    for (const auto& entry : fs::directory_iterator(dir)) {
      if (entry.is_regular_file() && entry.path().extension() == ".png")
        files_.push_back(entry.path());
    }
    std::sort(files_.begin(), files_.end());
    if (files_.empty()) raise(errc::decode_failure, "no frames in " + dir.string());

    first_ = read_png(files_[0]);
    info_.width = first_->width;
    info_.height = first_->height;
    info_.fps = default_fps;
    info_.frame_count = static_cast<std::int64_t>(files_.size());
    validate_video_info(info_);
  }

  const VideoInfo& info() const override { return info_; }

  std::optional<Frame> next() override {
    if (next_index_ >= static_cast<std::int64_t>(files_.size())) return std::nullopt;
    Frame frame;
    frame.index = next_index_;
    if (next_index_ == 0 && first_) {
      frame.image = std::move(*first_);
      first_.reset();
    } else {
      frame.image = read_png(files_[static_cast<std::size_t>(next_index_)]);
    }
    if (frame.image.width != info_.width || frame.image.height != info_.height)
      raise(errc::inconsistent_dimensions,
            files_[static_cast<std::size_t>(next_index_)].string() +
                " does not match the first frame's dimensions");
    ++next_index_;
    return frame;
  }

 private:
  std::vector<std::filesystem::path> files_;
  std::optional<ImageRgb> first_;
  VideoInfo info_;
  std::int64_t next_index_ = 0;
};

class DirectoryFrameSink final : public FrameSink {
 public:
  DirectoryFrameSink(const std::filesystem::path& dir, const VideoInfo& info)
      : dir_(dir), info_(info) {
    validate_video_info(info_);
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) raise(errc::encode_failure, "cannot create " + dir_.string());
  }

  void write(const Frame& frame) override {
    if (frame.index != next_index_)
      raise(errc::out_of_order_frame,
            "expected frame " + std::to_string(next_index_) + ", got " +
                std::to_string(frame.index));
    if (frame.image.width != info_.width || frame.image.height != info_.height)
      raise(errc::encode_failure, "frame dimensions do not match the sink");
    write_png(dir_ / detail::frame_file_name(frame.index), frame.image);
    ++next_index_;
  }

  void finalize() override {}

 private:
  std::filesystem::path dir_;
  VideoInfo info_;
  std::int64_t next_index_ = 0;
};

// ---------------------------------------------------------------------------
// Video mode: headerless RGB24 over pipes to an external transcoder.
// ---------------------------------------------------------------------------

namespace detail {

/// Parses probe output: `key=value` lines (whitespace separated tokens also
/// accepted). Rational frame rates like 30000/1001 are supported; nb_frames
/// may be absent or N/A.
inline VideoInfo parse_probe_output(const std::string& text, double default_fps) {
  VideoInfo info;
  info.fps = 0;
  std::istringstream stream(text);
  std::string token;
  while (stream >> token) {
    const std::size_t eq = token.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = token.substr(0, eq);
    const std::string value = token.substr(eq + 1);
    try {
      if (key == "width") info.width = std::stoi(value);
      else if (key == "height") info.height = std::stoi(value);
      else if (key == "nb_frames") info.frame_count = std::stoll(value);
      else if (key == "avg_frame_rate" || key == "fps") {
        const std::size_t slash = value.find('/');
        if (slash == std::string::npos) {
          info.fps = std::stod(value);
        } else {
          const double num = std::stod(value.substr(0, slash));
          const double den = std::stod(value.substr(slash + 1));
          info.fps = den != 0 ? num / den : 0;
        }
      }
    } catch (const std::exception&) {
      // N/A and friends: leave the field at its default
    }
  }
  if (info.width < 1 || info.height < 1)
    raise(errc::decode_failure, "probe did not report frame dimensions");
  if (!(info.fps > 0)) info.fps = default_fps;
  if (info.frame_count < 0) info.frame_count = 0;
  validate_video_info(info);
  return info;
}

}  // namespace detail

/// Runs the probe command and parses the reported stream properties.
inline VideoInfo probe_video(const std::filesystem::path& path,
                             const TranscoderTemplates& templates,
                             double default_fps = 25.0) {
  if (!std::filesystem::exists(path))
    raise(errc::not_found, path.string() + " does not exist");
  const std::map<std::string, std::string> vars = {
      {"input", shell_quote(path.string())}};
  std::string probe_out;
  PipeProcess probe(expand_template(templates.probe, vars),
                    PipeProcess::Direction::read);
  char buf[4096];
  std::size_t n;
  while ((n = probe.read_some(buf, sizeof(buf))) > 0) probe_out.append(buf, n);
  if (probe.close() != 0)
    raise(errc::decode_failure, "probe command failed for " + path.string());
  return detail::parse_probe_output(probe_out, default_fps);
}

class VideoFrameSource final : public FrameSource {
 public:
  VideoFrameSource(const std::filesystem::path& path,
                   const TranscoderTemplates& templates, double default_fps = 25.0) {
    info_ = probe_video(path, templates, default_fps);
    const std::map<std::string, std::string> vars = {
        {"input", shell_quote(path.string())}};
    decoder_ = std::make_unique<PipeProcess>(
        expand_template(templates.decode, vars), PipeProcess::Direction::read);
  }

  const VideoInfo& info() const override { return info_; }

  std::optional<Frame> next() override {
    if (decoder_ == nullptr) return std::nullopt;
    Frame frame;
    frame.index = next_index_;
    frame.image.width = info_.width;
    frame.image.height = info_.height;
    const std::size_t frame_bytes =
        static_cast<std::size_t>(info_.width) * info_.height * 3;
    frame.image.pixels.resize(frame_bytes);
    const std::size_t got = decoder_->read_some(frame.image.pixels.data(), frame_bytes);
    if (got == 0) {
      const int status = decoder_->close();
      decoder_.reset();
      if (status != 0)
        raise(errc::decode_failure,
              "decoder exited with status " + std::to_string(status));
      return std::nullopt;
    }
    if (got != frame_bytes)
      raise(errc::decode_failure,
            "short read: got " + std::to_string(got) + " of " +
                std::to_string(frame_bytes) + " bytes for frame " +
                std::to_string(next_index_));
    ++next_index_;
    return frame;
  }

 private:
  VideoInfo info_;
  std::unique_ptr<PipeProcess> decoder_;
  std::int64_t next_index_ = 0;
};

class VideoFrameSink final : public FrameSink {
 public:
  VideoFrameSink(const std::filesystem::path& path, const VideoInfo& info,
                 const TranscoderTemplates& templates)
      : info_(info) {
    validate_video_info(info_);
    const std::map<std::string, std::string> vars = {
        {"output", shell_quote(path.string())},
        {"width", std::to_string(info.width)},
        {"height", std::to_string(info.height)},
        {"fps", detail::format_fps(info.fps)}};
    encoder_ = std::make_unique<PipeProcess>(
        expand_template(templates.encode, vars), PipeProcess::Direction::write);
  }

  void write(const Frame& frame) override {
    if (encoder_ == nullptr) raise(errc::encode_failure, "sink already finalized");
    if (frame.index != next_index_)
      raise(errc::out_of_order_frame,
            "expected frame " + std::to_string(next_index_) + ", got " +
                std::to_string(frame.index));
    if (frame.image.width != info_.width || frame.image.height != info_.height)
      raise(errc::encode_failure, "frame dimensions do not match the sink");
    if (!encoder_->write_all(frame.image.pixels.data(), frame.image.pixels.size()))
      raise(errc::encode_failure, "encoder pipe write failed");
    ++next_index_;
  }

  void finalize() override {
    if (encoder_ == nullptr) return;
    const int status = encoder_->close();
    encoder_.reset();
    if (status != 0)
      raise(errc::encode_failure,
            "encoder exited with status " + std::to_string(status));
  }

 private:
  VideoInfo info_;
  std::unique_ptr<PipeProcess> encoder_;
  std::int64_t next_index_ = 0;
};

// ---------------------------------------------------------------------------
// Factories
// ---------------------------------------------------------------------------

inline std::unique_ptr<FrameSource> open_frame_source(
    const std::filesystem::path& path, IoMode mode,
    const TranscoderTemplates& templates = {}, double default_fps = 25.0) {
  if (mode == IoMode::frame_directory)
    return std::make_unique<DirectoryFrameSource>(path, default_fps);
  return std::make_unique<VideoFrameSource>(path, templates, default_fps);
}

/// Stream properties without decoding: directory mode walks the file list,
/// video mode runs only the probe command.
inline VideoInfo probe_frame_source(const std::filesystem::path& path, IoMode mode,
                                    const TranscoderTemplates& templates = {},
                                    double default_fps = 25.0) {
  if (mode == IoMode::video) return probe_video(path, templates, default_fps);
  DirectoryFrameSource source(path, default_fps);
  return source.info();
}

inline std::unique_ptr<FrameSink> open_frame_sink(
    const std::filesystem::path& path, const VideoInfo& info, IoMode mode,
    const TranscoderTemplates& templates = {}) {
  if (mode == IoMode::frame_directory)
    return std::make_unique<DirectoryFrameSink>(path, info);
  return std::make_unique<VideoFrameSink>(path, info, templates);
}

}  // namespace lesionseg
