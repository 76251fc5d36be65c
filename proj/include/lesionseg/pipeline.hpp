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
#include <array>
#include <cctype>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <future>
#include <memory>
#include <numeric>
#include <string>
#include <utility>
#include <vector>

#include "lesionseg/error.hpp"
#include "lesionseg/eval.hpp"
#include "lesionseg/external_backend.hpp"
#include "lesionseg/ingest.hpp"
#include "lesionseg/metadata.hpp"
#include "lesionseg/render.hpp"
#include "lesionseg/rng.hpp"
#include "lesionseg/segmenter.hpp"

namespace lesionseg {

// ---------------------------------------------------------------------------
// Configuration
// ---------------------------------------------------------------------------

struct RunConfig {
  std::vector<std::filesystem::path> inputs;
  std::vector<std::string> models;  // "mock:SEED", "replay:PATH", "external:CMD"
  std::filesystem::path output_dir;
  SegmenterConfig segmenter;
  OverlayStyle overlay;
  int timeline_height = 0;  // 0 selects max(8, frame_height / 60)
  bool emit_metadata = true;
  IoMode io_mode = IoMode::frame_directory;
  int workers = 1;
  // Zeroes the timing block so identical runs emit identical bytes.
  bool stable_timing = false;
  TranscoderTemplates transcoder;
};

struct BackendSpec {
  enum class Kind { mock, replay, external };
  Kind kind = Kind::mock;
  std::string arg;
};

inline BackendSpec parse_backend_spec(const std::string& spec) {
  const std::size_t colon = spec.find(':');
  const std::string kind = colon == std::string::npos ? spec : spec.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : spec.substr(colon + 1);
  BackendSpec out;
  out.arg = arg;
  if (kind == "mock") {
    out.kind = BackendSpec::Kind::mock;
    if (!arg.empty()) {
      try {
        (void)std::stoull(arg);
      } catch (const std::exception&) {
        raise(errc::config_error, "mock seed must be an integer: " + spec);
      }
    }
  } else if (kind == "replay") {
    out.kind = BackendSpec::Kind::replay;
    if (arg.empty()) raise(errc::config_error, "replay needs a metadata path");
  } else if (kind == "external") {
    out.kind = BackendSpec::Kind::external;
    if (arg.empty()) raise(errc::config_error, "external needs a runner command");
  } else {
    raise(errc::config_error, "unknown model spec '" + spec + "'");
  }
  return out;
}

/// Filesystem-safe tag identifying a model spec inside output names.
inline std::string model_tag(const std::string& spec) {
  const BackendSpec parsed = parse_backend_spec(spec);
  std::string base;
  switch (parsed.kind) {
    case BackendSpec::Kind::mock:
      base = "mock-" + (parsed.arg.empty() ? "0" : parsed.arg);
      break;
    case BackendSpec::Kind::replay: {
      std::filesystem::path p = parsed.arg;
      std::string stem = p.stem().string();  // strips .json
      if (stem.size() > 5 && stem.substr(stem.size() - 5) == ".meta")
        stem = stem.substr(0, stem.size() - 5);
      base = "replay-" + stem;
      break;
    }
    case BackendSpec::Kind::external: {
      // Last token of the runner command; usually the model artifact.
      const std::size_t space = parsed.arg.find_last_of(' ');
      const std::filesystem::path last =
          space == std::string::npos ? parsed.arg : parsed.arg.substr(space + 1);
      base = "external-" + last.stem().string();
      break;
    }
  }
  for (char& c : base)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_'))
      c = '-';
  return base;
}

// ---------------------------------------------------------------------------
// Runtime estimation
// ---------------------------------------------------------------------------

struct RuntimeProfile {
  int width = 0;
  int height = 0;
  double avg_ms_per_frame = 0.0;
};

/// Average per-frame processing times measured on the reference GPU
/// workstation, by input resolution.
inline std::vector<RuntimeProfile> builtin_runtime_profiles() {
  return {
      RuntimeProfile{640, 360, 153.0},
      RuntimeProfile{1280, 720, 158.0},
      RuntimeProfile{1920, 1080, 170.0},
      RuntimeProfile{3840, 2160, 207.0},
  };
}

/// total_seconds = avg_ms_per_frame * fps * duration_s / 1000.
inline double estimate_runtime(const RuntimeProfile& profile, double fps,
                               double duration_s) {
  if (!(profile.avg_ms_per_frame > 0) || !(fps > 0) || duration_s < 0)
    raise(errc::out_of_range, "estimate inputs must be positive");
  return profile.avg_ms_per_frame * fps * duration_s / 1000.0;
}

// ---------------------------------------------------------------------------
// Single-video processing
// ---------------------------------------------------------------------------

struct ProcessResult {
  std::filesystem::path annotated_path;
  std::filesystem::path metadata_path;  // empty when metadata is disabled
  RunMetadata metadata;
};

namespace detail {

struct ResolvedBackend {
  std::function<FrameDetections(const Frame&)> per_frame;
  bool concurrent = false;
  // Keeps owned state (backend instance / replay metadata) alive.
  std::shared_ptr<void> state;
};

inline ResolvedBackend resolve_backend(const BackendSpec& spec,
                                       const SegmenterConfig& seg_cfg,
                                       const VideoInfo& info) {
  ResolvedBackend out;
  switch (spec.kind) {
    case BackendSpec::Kind::mock: {
      const std::uint64_t seed = spec.arg.empty() ? 0 : std::stoull(spec.arg);
      auto backend = std::make_shared<MockBackend>(seed);
      out.state = backend;
      out.concurrent = true;
      out.per_frame = [backend, seg_cfg](const Frame& frame) {
        return segment_frame(*backend, frame, seg_cfg);
      };
      break;
    }
    case BackendSpec::Kind::replay: {
      auto meta = std::make_shared<RunMetadata>(parse_metadata(spec.arg));
      check_replay_compatible(*meta, info.width, info.height);
      out.state = meta;
      out.concurrent = true;
      out.per_frame = [meta](const Frame& frame) {
        return replay_segment(*meta, frame.index);
      };
      break;
    }
    case BackendSpec::Kind::external: {
      auto backend = std::make_shared<ExternalBackend>(spec.arg);
      out.state = backend;
      out.concurrent = false;
      out.per_frame = [backend, seg_cfg](const Frame& frame) {
        return segment_frame(*backend, frame, seg_cfg);
      };
      break;
    }
  }
  return out;
}

/// Runs `fn` over every frame of `source`, fanning out to `workers` threads
/// in bounded chunks; results come back in frame order.
inline std::vector<FrameDetections> analyze_all_frames(
    FrameSource& source, const std::function<FrameDetections(const Frame&)>& fn,
    int workers) {
  std::vector<FrameDetections> all;
  if (workers <= 1) {
    while (auto frame = source.next()) all.push_back(fn(*frame));
    return all;
  }
  std::vector<Frame> chunk;
  chunk.reserve(static_cast<std::size_t>(workers));
  bool done = false;
  while (!done) {
    chunk.clear();
    while (static_cast<int>(chunk.size()) < workers) {
      auto frame = source.next();
      if (!frame) {
        done = true;
        break;
      }
      chunk.push_back(std::move(*frame));
    }
    std::vector<std::future<FrameDetections>> futures;
    futures.reserve(chunk.size());
    for (const Frame& frame : chunk)
      futures.push_back(
          std::async(std::launch::async, [&fn, &frame] { return fn(frame); }));
    for (auto& f : futures) all.push_back(f.get());
  }
  return all;
}

inline std::string input_stem(const std::filesystem::path& input) {
  std::filesystem::path p = input.lexically_normal();
  std::string name = p.filename().string();
  if (name.empty() || name == ".")
    name = p.parent_path().filename().string();
  const std::size_t dot = name.rfind('.');
  if (dot != std::string::npos && dot > 0 &&
      std::filesystem::is_regular_file(input))
    name = name.substr(0, dot);
  return name;
}

}  // namespace detail

/// Computed output locations for one (input, model) pair.
struct OutputNames {
  std::filesystem::path annotated;
  std::filesystem::path metadata;
};

inline OutputNames output_names(const RunConfig& cfg,
                                const std::filesystem::path& input,
                                const std::string& model_spec) {
  const std::string stem = detail::input_stem(input);
  const std::string tag = model_tag(model_spec);
  OutputNames names;
  if (cfg.io_mode == IoMode::frame_directory) {
    names.annotated = cfg.output_dir / (stem + "__" + tag);
  } else {
    std::string ext = input.extension().string();
    if (ext.empty()) ext = ".mp4";
    names.annotated = cfg.output_dir / (stem + "__" + tag + ext);
  }
  names.metadata = cfg.output_dir / (stem + "__" + tag + ".meta.json");
  return names;
}

/// Two-pass processing of one video with one model: pass 1 streams frames
/// through the backend and collects detections, pass 2 re-reads the frames
/// and writes the annotated output with the complete indication bar attached
/// to every frame. Partial outputs are removed on failure.
inline ProcessResult process_video(const RunConfig& cfg,
                                   const std::filesystem::path& input,
                                   const std::string& model_spec) {
  const auto started = std::chrono::steady_clock::now();
  const BackendSpec spec = parse_backend_spec(model_spec);
  const OutputNames names = output_names(cfg, input, model_spec);

  try {
    auto source = open_frame_source(input, cfg.io_mode, cfg.transcoder);
    const VideoInfo info = source->info();
    const detail::ResolvedBackend backend =
        detail::resolve_backend(spec, cfg.segmenter, info);

    const int workers =
        backend.concurrent ? std::max(1, cfg.workers) : 1;
    std::vector<FrameDetections> all =
        detail::analyze_all_frames(*source, backend.per_frame, workers);
    if (all.empty()) raise(errc::decode_failure, "no frames in " + input.string());
    const auto frame_count = static_cast<std::int64_t>(all.size());

    const TimelineSummary summary = summarize_detections(all, frame_count);
    const int strip_height = cfg.timeline_height > 0
                                 ? cfg.timeline_height
                                 : default_timeline_height(info.height);
    TimelineStyle timeline_style;
    timeline_style.confidence_threshold = cfg.segmenter.confidence_threshold;

    VideoInfo out_info = info;
    out_info.height = info.height + strip_height;
    out_info.frame_count = frame_count;

    auto replay_source = open_frame_source(input, cfg.io_mode, cfg.transcoder);
    auto sink = open_frame_sink(names.annotated, out_info, cfg.io_mode,
                                cfg.transcoder);
    while (auto frame = replay_source->next()) {
      const auto i = static_cast<std::size_t>(frame->index);
      const ImageRgb overlaid =
          composite_overlay(frame->image, all[i], cfg.overlay);
      const ImageRgb strip = render_timeline(summary, info.width, strip_height,
                                             frame->index, timeline_style);
      Frame out;
      out.index = frame->index;
      out.image = attach_timeline(overlaid, strip);
      sink->write(out);
    }
    sink->finalize();

    ProcessResult result;
    result.annotated_path = names.annotated;
    result.metadata.schema_version = kMetadataSchemaVersion;
    result.metadata.video.path = input.string();
    result.metadata.video.width = info.width;
    result.metadata.video.height = info.height;
    result.metadata.video.fps = info.fps;
    result.metadata.video.frame_count = frame_count;
    result.metadata.config.model = model_spec;
    result.metadata.config.io_mode = to_string(cfg.io_mode);
    result.metadata.config.confidence_threshold = cfg.segmenter.confidence_threshold;
    result.metadata.config.short_side_target = cfg.segmenter.short_side_target;
    result.metadata.config.long_side_cap = cfg.segmenter.long_side_cap;
    result.metadata.config.overlay_alpha = cfg.overlay.alpha;
    result.metadata.config.draw_boxes = cfg.overlay.draw_boxes;
    result.metadata.config.draw_labels = cfg.overlay.draw_labels;
    result.metadata.config.timeline_height = strip_height;
    result.metadata.frames = std::move(all);
    result.metadata.timeline = summary.per_frame_confidence;
    if (!cfg.stable_timing) {
      const double total_ms =
          std::chrono::duration<double, std::milli>(
              std::chrono::steady_clock::now() - started)
              .count();
      result.metadata.timing.total_ms = total_ms;
      result.metadata.timing.per_frame_ms_mean =
          total_ms / static_cast<double>(frame_count);
    }
    if (cfg.emit_metadata) {
      result.metadata_path = names.metadata;
      emit_metadata(result.metadata, names.metadata);
    }
    return result;
  } catch (...) {
    std::error_code ec;
    std::filesystem::remove_all(names.annotated, ec);
    std::filesystem::remove(names.metadata, ec);
    throw;
  }
}

// ---------------------------------------------------------------------------
// Batch execution
// ---------------------------------------------------------------------------

struct PairOutcome {
  std::filesystem::path input;
  std::string model;
  bool ok = false;
  std::string message;  // error text when !ok
  std::filesystem::path annotated_path;
  std::filesystem::path metadata_path;
};

struct BatchSummary {
  std::vector<PairOutcome> outcomes;

  bool all_ok() const {
    return std::all_of(outcomes.begin(), outcomes.end(),
                       [](const PairOutcome& o) { return o.ok; });
  }
};

inline void validate_config(const RunConfig& cfg) {
  if (cfg.inputs.empty()) raise(errc::config_error, "no inputs given");
  if (cfg.models.empty()) raise(errc::config_error, "no models given");
  if (cfg.output_dir.empty()) raise(errc::config_error, "no output directory given");
  for (const auto& model : cfg.models) (void)parse_backend_spec(model);
  if (cfg.segmenter.confidence_threshold < 0 || cfg.segmenter.confidence_threshold > 1)
    raise(errc::config_error, "confidence threshold outside [0, 1]");
  if (cfg.segmenter.short_side_target < 1 ||
      cfg.segmenter.short_side_target > cfg.segmenter.long_side_cap)
    raise(errc::config_error, "resize targets must satisfy 0 < short <= long");

  std::error_code ec;
  const auto out_canonical =
      std::filesystem::weakly_canonical(cfg.output_dir, ec);
  for (const auto& input : cfg.inputs) {
    const auto in_canonical = std::filesystem::weakly_canonical(input, ec);
    const auto in_dir = std::filesystem::is_directory(input)
                            ? in_canonical
                            : in_canonical.parent_path();
    if (out_canonical == in_canonical || out_canonical == in_dir)
      raise(errc::config_error,
            "output directory must be distinct from input directories");
  }
}

/// Processes the Cartesian product inputs x models. A failing pair is
/// recorded and the batch continues.
inline BatchSummary run_batch(const RunConfig& cfg) {
  validate_config(cfg);
  std::error_code ec;
  std::filesystem::create_directories(cfg.output_dir, ec);
  if (ec) raise(errc::config_error, "cannot create " + cfg.output_dir.string());

  BatchSummary summary;
  for (const auto& input : cfg.inputs) {
    for (const auto& model : cfg.models) {
      PairOutcome outcome;
      outcome.input = input;
      outcome.model = model;
      try {
        const ProcessResult result = process_video(cfg, input, model);
        outcome.ok = true;
        outcome.annotated_path = result.annotated_path;
        outcome.metadata_path = result.metadata_path;
      } catch (const std::exception& e) {
        outcome.ok = false;
        outcome.message = e.what();
      }
      summary.outcomes.push_back(std::move(outcome));
    }
  }
  return summary;
}

// ---------------------------------------------------------------------------
// Dataset splitting
// ---------------------------------------------------------------------------

/// Deterministic seeded partition of ground-truth frames into train/val/test.
/// Fractions must be positive and sum to 1; sizes are floors with the
/// remainder going to train.
inline std::array<GroundTruthSet, 3> split_dataset(
    const GroundTruthSet& gt, std::uint64_t seed,
    const std::array<double, 3>& fractions) {
  double sum = 0;
  for (const double f : fractions) {
    if (!(f > 0)) raise(errc::bad_fractions, "fractions must be positive");
    sum += f;
  }
  if (std::abs(sum - 1.0) > 1e-9)
    raise(errc::bad_fractions, "fractions must sum to 1");

  std::vector<std::size_t> order(gt.frames.size());
  std::iota(order.begin(), order.end(), 0);
  SplitMix64 rng(seed);
  for (std::size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[rng.next_below(i)]);

  const auto n = static_cast<std::int64_t>(gt.frames.size());
  const auto n_val =
      static_cast<std::int64_t>(std::floor(fractions[1] * n + 1e-9));
  const auto n_test =
      static_cast<std::int64_t>(std::floor(fractions[2] * n + 1e-9));
  const std::int64_t n_train = n - n_val - n_test;

  std::array<GroundTruthSet, 3> out;
  for (auto& subset : out) subset.categories = gt.categories;
  for (std::int64_t i = 0; i < n; ++i) {
    const GtFrame& frame = gt.frames[order[static_cast<std::size_t>(i)]];
    if (i < n_train) out[0].frames.push_back(frame);
    else if (i < n_train + n_val) out[1].frames.push_back(frame);
    else out[2].frames.push_back(frame);
  }
  for (auto& subset : out)
    std::sort(subset.frames.begin(), subset.frames.end(),
              [](const GtFrame& a, const GtFrame& b) { return a.id < b.id; });
  return out;
}

// ---------------------------------------------------------------------------
// Metadata self-consistency
// ---------------------------------------------------------------------------

/// Checks that the stored timeline equals summarize_detections over the
/// stored frames. Raises SchemaError on mismatch.
inline void validate_metadata_consistency(const RunMetadata& meta) {
  if (meta.video.frame_count < 1)
    raise(errc::schema_error, "metadata has no frames");
  const TimelineSummary summary =
      summarize_detections(meta.frames, meta.video.frame_count);
  if (summary.per_frame_confidence != meta.timeline)
    raise(errc::schema_error, "timeline does not match the stored detections");
}

}  // namespace lesionseg
