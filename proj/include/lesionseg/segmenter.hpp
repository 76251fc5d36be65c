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
#include <cmath>
#include <cstdint>
#include <exception>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "lesionseg/detection.hpp"
#include "lesionseg/error.hpp"
#include "lesionseg/image.hpp"
#include "lesionseg/mask.hpp"
#include "lesionseg/rng.hpp"

namespace lesionseg {

struct SegmenterConfig {
  double confidence_threshold = 0.50;  // inclusive: score >= threshold is kept
  int short_side_target = 800;
  int long_side_cap = 1333;
};

struct ResizePlan {
  int width = 0;
  int height = 0;
  double scale = 1.0;

  friend bool operator==(const ResizePlan&, const ResizePlan&) = default;
};

/// Model-conventional resize: scale so the short side reaches
/// `short_side_target` unless that would push the long side past
/// `long_side_cap`, in which case the cap binds. Rounding is half away from
/// zero with a floor of 1 px per side.
inline ResizePlan compute_resize(int width, int height, const SegmenterConfig& cfg) {
  if (width < 1 || height < 1)
    raise(errc::bad_geometry, "frame dimensions must be >= 1");
  const double short_side = std::min(width, height);
  const double long_side = std::max(width, height);
  const double scale =
      std::min(cfg.short_side_target / short_side, cfg.long_side_cap / long_side);
  ResizePlan plan;
  plan.scale = scale;
  plan.width = std::max(1, round_half_away(width * scale));
  plan.height = std::max(1, round_half_away(height * scale));
  return plan;
}

/// Keeps exactly the detections with score >= threshold, preserving order.
inline FrameDetections filter_detections(FrameDetections dets, double threshold) {
  std::vector<Detection> kept;
  kept.reserve(dets.detections.size());
  for (auto& d : dets.detections) {
    if (d.score >= threshold) kept.push_back(std::move(d));
  }
  dets.detections = std::move(kept);
  return dets;
}

/// Backend output before mapping back to frame coordinates: mask in the
/// preprocessed space plus score and label.
struct RawDetection {
  BinaryMask mask;
  double score = 0.0;
  std::string label;
};

/// Per-frame instance segmentation backend. Receives the preprocessed
/// (resized) frame and returns detections in that coordinate space. Must be
/// deterministic in the frame content and its own state.
class SegmenterBackend {
 public:
  virtual ~SegmenterBackend() = default;

  virtual std::vector<RawDetection> run(const ImageRgb& preprocessed,
                                        std::int64_t frame_index) = 0;

  /// Whether `run` may be called from multiple threads at once.
  virtual bool concurrent_safe() const { return false; }

  virtual std::string name() const = 0;
};

/// Deterministic procedural detections for tests and demos. All geometry is
/// derived from a splitmix64 stream seeded with (seed XOR frame_index);
/// identical inputs give bit-identical outputs on any platform. The ellipse
/// membership test is pure integer arithmetic.
inline std::vector<RawDetection> mock_segment(std::uint64_t seed, int width,
                                              int height,
                                              std::int64_t frame_index) {
  if (width < 1 || height < 1)
    raise(errc::bad_geometry, "frame dimensions must be >= 1");
  SplitMix64 rng(seed ^ static_cast<std::uint64_t>(frame_index));
  const int count = static_cast<int>(rng.next_below(4));
  std::vector<RawDetection> dets;
  dets.reserve(count);
  for (int k = 0; k < count; ++k) {
    // Semi-axes of at least 2 px, at most a quarter side, clamped so the
    // ellipse never leaves the frame.
    std::int64_t a = 2 + static_cast<std::int64_t>(rng.next_below(
                             static_cast<std::uint64_t>(std::max(1, width / 4))));
    std::int64_t b = 2 + static_cast<std::int64_t>(rng.next_below(
                             static_cast<std::uint64_t>(std::max(1, height / 4))));
    a = std::min<std::int64_t>(a, std::max(1, (width - 1) / 2));
    b = std::min<std::int64_t>(b, std::max(1, (height - 1) / 2));
    const std::int64_t cx_lo = a, cx_hi = width - 1 - a;
    const std::int64_t cy_lo = b, cy_hi = height - 1 - b;
    const std::int64_t cx =
        cx_hi >= cx_lo
            ? cx_lo + static_cast<std::int64_t>(rng.next_below(
                          static_cast<std::uint64_t>(cx_hi - cx_lo + 1)))
            : width / 2;
    const std::int64_t cy =
        cy_hi >= cy_lo
            ? cy_lo + static_cast<std::int64_t>(rng.next_below(
                          static_cast<std::uint64_t>(cy_hi - cy_lo + 1)))
            : height / 2;
    const double score = 0.30 + static_cast<double>(rng.next_below(70)) / 100.0;

    RawDetection det;
    det.mask = BinaryMask::zeros(width, height);
    // Centers are pixel centers, so (x - cx, y - cy) offsets are integral and
    // the ellipse inequality clears denominators: dx^2 b^2 + dy^2 a^2 <= a^2 b^2.
    const std::int64_t a2 = a * a, b2 = b * b;
    const int x_lo = static_cast<int>(std::max<std::int64_t>(0, cx - a));
    const int x_hi = static_cast<int>(std::min<std::int64_t>(width - 1, cx + a));
    const int y_lo = static_cast<int>(std::max<std::int64_t>(0, cy - b));
    const int y_hi = static_cast<int>(std::min<std::int64_t>(height - 1, cy + b));
    for (int y = y_lo; y <= y_hi; ++y) {
      const std::int64_t dy = y - cy;
      for (int x = x_lo; x <= x_hi; ++x) {
        const std::int64_t dx = x - cx;
        if (dx * dx * b2 + dy * dy * a2 <= a2 * b2) det.mask.set(x, y, true);
      }
    }
    det.score = score;
    det.label = "lesion";
    dets.push_back(std::move(det));
  }
  return dets;
}

class MockBackend : public SegmenterBackend {
 public:
  explicit MockBackend(std::uint64_t seed) : seed_(seed) {}

  std::vector<RawDetection> run(const ImageRgb& preprocessed,
                                std::int64_t frame_index) override {
    return mock_segment(seed_, preprocessed.width, preprocessed.height, frame_index);
  }

  bool concurrent_safe() const override { return true; }
  std::string name() const override { return "mock"; }

 private:
  std::uint64_t seed_;
};

/// Runs one frame through a backend: resize per compute_resize, invoke the
/// backend, map masks back to frame resolution (nearest neighbor), recompute
/// tight boxes, then apply the confidence threshold. Detections whose mask
/// has no surviving foreground after the rescale are dropped so every
/// returned Detection satisfies its invariants.
inline FrameDetections segment_frame(SegmenterBackend& backend, const Frame& frame,
                                     const SegmenterConfig& cfg) {
  const ResizePlan plan = compute_resize(frame.image.width, frame.image.height, cfg);
  const ImageRgb preprocessed =
      plan.width == frame.image.width && plan.height == frame.image.height
          ? frame.image
          : resize_bilinear(frame.image, plan.width, plan.height);

  std::vector<RawDetection> raw;
  try {
    raw = backend.run(preprocessed, frame.index);
  } catch (const std::exception& e) {
    raise(errc::backend_failure, backend.name() + ": " + e.what());
  }

  FrameDetections out;
  out.frame_index = frame.index;
  for (auto& r : raw) {
    if (r.mask.width != plan.width || r.mask.height != plan.height)
      raise(errc::backend_failure,
            backend.name() + ": mask dimensions do not match preprocessed frame");
    if (!(r.score >= 0.0 && r.score <= 1.0))
      raise(errc::backend_failure,
            backend.name() + ": score " + std::to_string(r.score) +
                " outside [0, 1]");
    BinaryMask mapped = resize_nearest(r.mask, frame.image.width, frame.image.height);
    if (mapped.foreground_count() == 0) continue;
    Detection det;
    det.bbox = tight_bbox(mapped);
    det.mask = rle_encode(mapped);
    det.score = r.score;
    det.label = std::move(r.label);
    out.detections.push_back(std::move(det));
  }
  return filter_detections(std::move(out), cfg.confidence_threshold);
}

}  // namespace lesionseg
