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
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "lesionseg/detection.hpp"
#include "lesionseg/error.hpp"
#include "lesionseg/mask.hpp"

namespace lesionseg {

inline constexpr int kMetadataSchemaVersion = 1;

struct VideoDescriptor {
  std::string path;
  int width = 0;
  int height = 0;
  double fps = 25.0;
  std::int64_t frame_count = 0;

  friend bool operator==(const VideoDescriptor&, const VideoDescriptor&) = default;
};

/// Echo of the options that shaped a run; replaying or comparing runs reads
/// these instead of guessing.
struct ConfigEcho {
  std::string model;
  std::string io_mode = "frame_directory";
  double confidence_threshold = 0.50;
  int short_side_target = 800;
  int long_side_cap = 1333;
  double overlay_alpha = 0.45;
  bool draw_boxes = true;
  bool draw_labels = true;
  int timeline_height = 0;

  friend bool operator==(const ConfigEcho&, const ConfigEcho&) = default;
};

struct TimingInfo {
  double per_frame_ms_mean = 0.0;
  double total_ms = 0.0;

  friend bool operator==(const TimingInfo&, const TimingInfo&) = default;
};

/// The full machine-readable record of one video analysis.
struct RunMetadata {
  int schema_version = kMetadataSchemaVersion;
  VideoDescriptor video;
  ConfigEcho config;
  std::vector<FrameDetections> frames;  // sorted by frame_index
  std::vector<std::optional<double>> timeline;
  TimingInfo timing;

  friend bool operator==(const RunMetadata&, const RunMetadata&) = default;
};

// ---------------------------------------------------------------------------
// Serialization. Key order is fixed and the writer appends a trailing
// newline, so equal metadata values always serialize to equal bytes.
// ---------------------------------------------------------------------------

inline std::string metadata_to_json(const RunMetadata& meta) {
  nlohmann::ordered_json j;
  j["schema_version"] = meta.schema_version;
  {
    nlohmann::ordered_json v;
    v["path"] = meta.video.path;
    v["width"] = meta.video.width;
    v["height"] = meta.video.height;
    v["fps"] = meta.video.fps;
    v["frame_count"] = meta.video.frame_count;
    j["video"] = std::move(v);
  }
  {
    nlohmann::ordered_json c;
    c["model"] = meta.config.model;
    c["io_mode"] = meta.config.io_mode;
    c["confidence_threshold"] = meta.config.confidence_threshold;
    c["short_side_target"] = meta.config.short_side_target;
    c["long_side_cap"] = meta.config.long_side_cap;
    c["overlay_alpha"] = meta.config.overlay_alpha;
    c["draw_boxes"] = meta.config.draw_boxes;
    c["draw_labels"] = meta.config.draw_labels;
    c["timeline_height"] = meta.config.timeline_height;
    j["config"] = std::move(c);
  }
  j["frames"] = nlohmann::ordered_json::array();
  for (const auto& fd : meta.frames) {
    nlohmann::ordered_json jf;
    jf["frame_index"] = fd.frame_index;
    jf["detections"] = nlohmann::ordered_json::array();
    for (const auto& det : fd.detections) {
      nlohmann::ordered_json jd;
      jd["bbox"] = {det.bbox.x, det.bbox.y, det.bbox.w, det.bbox.h};
      jd["score"] = det.score;
      jd["label"] = det.label;
      {
        nlohmann::ordered_json jm;
        jm["size"] = {det.mask.height, det.mask.width};
        jm["counts"] = det.mask.runs;
        jd["mask_rle"] = std::move(jm);
      }
      if (det.id) jd["id"] = *det.id;
      jf["detections"].push_back(std::move(jd));
    }
    j["frames"].push_back(std::move(jf));
  }
  j["timeline"] = nlohmann::ordered_json::array();
  for (const auto& v : meta.timeline) {
    if (v)
      j["timeline"].push_back(*v);
    else
      j["timeline"].push_back(nullptr);
  }
  {
    nlohmann::ordered_json t;
    t["per_frame_ms_mean"] = meta.timing.per_frame_ms_mean;
    t["total_ms"] = meta.timing.total_ms;
    j["timing"] = std::move(t);
  }
  return j.dump(2) + "\n";
}

inline void emit_metadata(const RunMetadata& meta, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) raise(errc::encode_failure, "cannot write " + path.string());
  out << metadata_to_json(meta);
}

namespace detail {

inline void meta_require_keys(const nlohmann::ordered_json& obj,
                              std::initializer_list<const char*> required,
                              std::initializer_list<const char*> optional,
                              const std::string& where) {
  for (const char* key : required)
    if (!obj.contains(key))
      raise(errc::parse_error, where + ": missing key '" + key + "'");
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    bool known = false;
    for (const char* k : required) known = known || key == k;
    for (const char* k : optional) known = known || key == k;
    if (!known) raise(errc::parse_error, where + ": unknown key '" + key + "'");
  }
}

}  // namespace detail

/// Strict parser: unknown fields are rejected and every mask is checked to
/// decode against the recorded video dimensions. Round-trips emitted
/// metadata exactly.
inline RunMetadata metadata_from_json(std::string_view text) {
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    raise(errc::parse_error, e.what());
  }
  if (!j.is_object()) raise(errc::parse_error, "top level must be an object");
  try {
  detail::meta_require_keys(
      j, {"schema_version", "video", "config", "frames", "timeline", "timing"}, {},
      "top level");

  if (!j.at("schema_version").is_number_integer())
    raise(errc::parse_error, "schema_version must be an integer");
  const int version = j.at("schema_version").get<int>();
  if (version != kMetadataSchemaVersion)
    raise(errc::schema_version_unsupported,
          "schema_version " + std::to_string(version) + " is not supported");

  RunMetadata meta;
  meta.schema_version = version;

  const auto& jv = j.at("video");
  detail::meta_require_keys(jv, {"path", "width", "height", "fps", "frame_count"},
                            {}, "video");
  meta.video.path = jv.at("path").get<std::string>();
  meta.video.width = jv.at("width").get<int>();
  meta.video.height = jv.at("height").get<int>();
  meta.video.fps = jv.at("fps").get<double>();
  meta.video.frame_count = jv.at("frame_count").get<std::int64_t>();
  if (meta.video.width < 1 || meta.video.height < 1 || meta.video.frame_count < 0 ||
      !(meta.video.fps > 0))
    raise(errc::parse_error, "video descriptor out of range");

  const auto& jc = j.at("config");
  detail::meta_require_keys(
      jc,
      {"model", "io_mode", "confidence_threshold", "short_side_target",
       "long_side_cap", "overlay_alpha", "draw_boxes", "draw_labels",
       "timeline_height"},
      {}, "config");
  meta.config.model = jc.at("model").get<std::string>();
  meta.config.io_mode = jc.at("io_mode").get<std::string>();
  meta.config.confidence_threshold = jc.at("confidence_threshold").get<double>();
  meta.config.short_side_target = jc.at("short_side_target").get<int>();
  meta.config.long_side_cap = jc.at("long_side_cap").get<int>();
  meta.config.overlay_alpha = jc.at("overlay_alpha").get<double>();
  meta.config.draw_boxes = jc.at("draw_boxes").get<bool>();
  meta.config.draw_labels = jc.at("draw_labels").get<bool>();
  meta.config.timeline_height = jc.at("timeline_height").get<int>();

  if (!j.at("frames").is_array()) raise(errc::parse_error, "frames must be an array");
  std::int64_t last_index = -1;
  for (const auto& jf : j.at("frames")) {
    detail::meta_require_keys(jf, {"frame_index", "detections"}, {}, "frame entry");
    FrameDetections fd;
    fd.frame_index = jf.at("frame_index").get<std::int64_t>();
    const std::string where = "frame " + std::to_string(fd.frame_index);
    if (fd.frame_index <= last_index)
      raise(errc::parse_error, where + ": frame_index not strictly increasing");
    if (fd.frame_index < 0 ||
        (meta.video.frame_count > 0 && fd.frame_index >= meta.video.frame_count))
      raise(errc::parse_error, where + ": frame_index outside the video");
    last_index = fd.frame_index;

    for (const auto& jd : jf.at("detections")) {
      detail::meta_require_keys(jd, {"bbox", "score", "label", "mask_rle"}, {"id"},
                                where + " detection");
      Detection det;
      const auto& jb = jd.at("bbox");
      if (!jb.is_array() || jb.size() != 4)
        raise(errc::parse_error, where + ": bbox must be [x, y, w, h]");
      det.bbox = BBox{jb[0].get<int>(), jb[1].get<int>(), jb[2].get<int>(),
                      jb[3].get<int>()};
      det.score = jd.at("score").get<double>();
      if (det.score < 0.0 || det.score > 1.0)
        raise(errc::parse_error, where + ": score outside [0, 1]");
      det.label = jd.at("label").get<std::string>();

      const auto& jm = jd.at("mask_rle");
      detail::meta_require_keys(jm, {"size", "counts"}, {}, where + " mask_rle");
      const auto& js = jm.at("size");
      if (!js.is_array() || js.size() != 2)
        raise(errc::parse_error, where + ": mask_rle.size must be [height, width]");
      det.mask.height = js[0].get<int>();
      det.mask.width = js[1].get<int>();
      if (det.mask.width != meta.video.width || det.mask.height != meta.video.height)
        raise(errc::parse_error, where + ": mask dimensions do not match the video");
      for (const auto& c : jm.at("counts"))
        det.mask.runs.push_back(c.get<std::int64_t>());
      try {
        const BinaryMask decoded = rle_decode(det.mask);
        if (tight_bbox(decoded) != det.bbox)
          raise(errc::parse_error, where + ": bbox is not the mask's tight box");
      } catch (const error& e) {
        if (e.code() == errc::parse_error) throw;
        raise(errc::parse_error, where + ": " + e.what());
      }
      if (jd.contains("id")) det.id = jd.at("id").get<std::int64_t>();
      fd.detections.push_back(std::move(det));
    }
    meta.frames.push_back(std::move(fd));
  }

  const auto& jt = j.at("timeline");
  if (!jt.is_array() ||
      static_cast<std::int64_t>(jt.size()) != meta.video.frame_count)
    raise(errc::parse_error, "timeline length must equal frame_count");
  for (const auto& v : jt) {
    if (v.is_null()) {
      meta.timeline.push_back(std::nullopt);
    } else {
      const double value = v.get<double>();
      if (value < 0.0 || value > 1.0)
        raise(errc::parse_error, "timeline value outside [0, 1]");
      meta.timeline.push_back(value);
    }
  }

  const auto& jg = j.at("timing");
  detail::meta_require_keys(jg, {"per_frame_ms_mean", "total_ms"}, {}, "timing");
  meta.timing.per_frame_ms_mean = jg.at("per_frame_ms_mean").get<double>();
  meta.timing.total_ms = jg.at("total_ms").get<double>();
  if (meta.timing.per_frame_ms_mean < 0 || meta.timing.total_ms < 0)
    raise(errc::parse_error, "timing must be non-negative");
  return meta;
  } catch (const nlohmann::json::exception& e) {
    raise(errc::parse_error, e.what());
  }
}

inline RunMetadata parse_metadata(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(errc::not_found, "cannot open " + path.string());
  std::string text((std::istreambuf_iterator<char>(in)),
                   std::istreambuf_iterator<char>());
  try {
    return metadata_from_json(text);
  } catch (const error& e) {
    if (e.code() == errc::parse_error)
      raise(errc::parse_error, path.string() + ": " + e.what());
    throw;
  }
}

// ---------------------------------------------------------------------------
// Replay
// ---------------------------------------------------------------------------

/// The stored detections for one frame, exactly as recorded — no resizing,
/// no re-filtering. Frames beyond the recorded range come back empty.
inline FrameDetections replay_segment(const RunMetadata& meta,
                                      std::int64_t frame_index) {
  const auto it = std::lower_bound(
      meta.frames.begin(), meta.frames.end(), frame_index,
      [](const FrameDetections& fd, std::int64_t v) { return fd.frame_index < v; });
  if (it != meta.frames.end() && it->frame_index == frame_index) return *it;
  FrameDetections empty;
  empty.frame_index = frame_index;
  return empty;
}

/// Raises DimensionMismatch unless the metadata was recorded at the given
/// frame geometry.
inline void check_replay_compatible(const RunMetadata& meta, int width, int height) {
  if (meta.video.width != width || meta.video.height != height)
    raise(errc::dimension_mismatch,
          "metadata recorded at " + std::to_string(meta.video.width) + "x" +
              std::to_string(meta.video.height) + ", video is " +
              std::to_string(width) + "x" + std::to_string(height));
}

}  // namespace lesionseg
