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
#include <optional>
#include <string>
#include <vector>

#include "lesionseg/detail/font5x7.hpp"
#include "lesionseg/detection.hpp"
#include "lesionseg/error.hpp"
#include "lesionseg/image.hpp"

namespace lesionseg {

struct Color {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Color&, const Color&) = default;
};

inline std::vector<Color> default_palette() {
  return {
      Color{255, 255, 0},    // yellow
      Color{0, 255, 255},    // cyan
      Color{255, 0, 255},    // magenta
      Color{0, 255, 127},    // spring green
      Color{255, 165, 0},    // orange
      Color{173, 216, 230},  // light blue
  };
}

struct OverlayStyle {
  double alpha = 0.45;
  std::vector<Color> palette = default_palette();
  bool draw_boxes = true;
  bool draw_labels = true;
  int label_scale = 1;  // integer scale of the built-in 5x7 font
};

/// Aggregated per-frame confidence backing the indication bar. A frame with
/// no detections carries no value.
struct TimelineSummary {
  std::int64_t frame_count = 0;
  std::vector<std::optional<double>> per_frame_confidence;
};

struct TimelineStyle {
  Color background{40, 40, 40};
  Color marker{0, 200, 0};
  double confidence_threshold = 0.50;  // colormap low endpoint
};

/// Per-frame mean of detection scores; frames without detections stay empty.
inline TimelineSummary summarize_detections(const std::vector<FrameDetections>& all,
                                            std::int64_t frame_count) {
  if (frame_count < 1) raise(errc::bad_geometry, "frame_count must be >= 1");
  TimelineSummary summary;
  summary.frame_count = frame_count;
  summary.per_frame_confidence.assign(static_cast<std::size_t>(frame_count),
                                      std::nullopt);
  std::vector<double> sums(static_cast<std::size_t>(frame_count), 0.0);
  std::vector<std::int64_t> counts(static_cast<std::size_t>(frame_count), 0);
  for (const auto& fd : all) {
    if (fd.frame_index < 0 || fd.frame_index >= frame_count)
      raise(errc::index_out_of_range,
            "frame index " + std::to_string(fd.frame_index) + " not in [0, " +
                std::to_string(frame_count) + ")");
    for (const auto& det : fd.detections) {
      sums[static_cast<std::size_t>(fd.frame_index)] += det.score;
      counts[static_cast<std::size_t>(fd.frame_index)] += 1;
    }
  }
  for (std::int64_t i = 0; i < frame_count; ++i) {
    if (counts[static_cast<std::size_t>(i)] > 0)
      summary.per_frame_confidence[static_cast<std::size_t>(i)] =
          sums[static_cast<std::size_t>(i)] / counts[static_cast<std::size_t>(i)];
  }
  return summary;
}

/// Linear ramp from yellow (255,255,0) at the confidence threshold to dark
/// red (139,0,0) at 1.0, rounded half away from zero per channel.
inline Color confidence_to_color(double c, double threshold = 0.50) {
  if (c < threshold || c > 1.0)
    raise(errc::out_of_range, "confidence " + std::to_string(c) +
                                  " outside [" + std::to_string(threshold) + ", 1]");
  const double span = 1.0 - threshold;
  const double t = span > 0.0 ? (c - threshold) / span : 1.0;
  Color color;
  color.r = clamp_channel(255.0 + t * (139.0 - 255.0));
  color.g = clamp_channel(255.0 + t * (0.0 - 255.0));
  color.b = 0;
  return color;
}

/// Renders the indication bar. Frame i maps to column floor(i*width/n); a
/// column shows the colormap of the mean over the present values of its
/// frames, or the background when every mapped frame is empty. The column of
/// `current_frame` is overdrawn as a full-height marker, widened to 3 px when
/// the bar is at least three columns per frame.
inline ImageRgb render_timeline(const TimelineSummary& summary, int width,
                                int height, std::int64_t current_frame,
                                const TimelineStyle& style = {}) {
  const std::int64_t n = summary.frame_count;
  if (width < 1 || height < 4)
    raise(errc::bad_geometry, "timeline strip needs width >= 1 and height >= 4");
  if (n < 1 || summary.per_frame_confidence.size() != static_cast<std::size_t>(n))
    raise(errc::bad_geometry, "summary length does not match frame_count");
  if (current_frame < 0 || current_frame >= n)
    raise(errc::bad_geometry, "current_frame outside [0, frame_count)");

  std::vector<double> sums(static_cast<std::size_t>(width), 0.0);
  std::vector<std::int64_t> counts(static_cast<std::size_t>(width), 0);
  for (std::int64_t i = 0; i < n; ++i) {
    const auto& v = summary.per_frame_confidence[static_cast<std::size_t>(i)];
    if (!v) continue;
    if (*v < 0.0 || *v > 1.0)
      raise(errc::bad_geometry, "confidence outside [0, 1]");
    const auto col = static_cast<std::size_t>(i * width / n);
    sums[col] += *v;
    counts[col] += 1;
  }

  ImageRgb strip = ImageRgb::filled(width, height, style.background.r,
                                    style.background.g, style.background.b);
  for (int x = 0; x < width; ++x) {
    if (counts[static_cast<std::size_t>(x)] == 0) continue;
    double mean =
        sums[static_cast<std::size_t>(x)] / counts[static_cast<std::size_t>(x)];
    // Pipeline-produced values sit at or above the threshold already; clamp
    // guards hand-built summaries.
    mean = std::clamp(mean, style.confidence_threshold, 1.0);
    const Color c = confidence_to_color(mean, style.confidence_threshold);
    for (int y = 0; y < height; ++y) {
      std::uint8_t* px = strip.at(x, y);
      px[0] = c.r;
      px[1] = c.g;
      px[2] = c.b;
    }
  }

  const int marker_col = static_cast<int>(current_frame * width / n);
  const int half = width >= 3 * n ? 1 : 0;
  for (int x = std::max(0, marker_col - half);
       x <= std::min(width - 1, marker_col + half); ++x) {
    for (int y = 0; y < height; ++y) {
      std::uint8_t* px = strip.at(x, y);
      px[0] = style.marker.r;
      px[1] = style.marker.g;
      px[2] = style.marker.b;
    }
  }
  return strip;
}

namespace detail {

/// Box and label annotations use the same alpha as the mask fill, so an
/// overlay at alpha 0 leaves the frame untouched.
inline void blend_pixel(ImageRgb& img, int x, int y, const Color& color,
                        double alpha) {
  if (x < 0 || x >= img.width || y < 0 || y >= img.height) return;
  std::uint8_t* p = img.at(x, y);
  p[0] = clamp_channel((1.0 - alpha) * p[0] + alpha * color.r);
  p[1] = clamp_channel((1.0 - alpha) * p[1] + alpha * color.g);
  p[2] = clamp_channel((1.0 - alpha) * p[2] + alpha * color.b);
}

inline void draw_text(ImageRgb& img, const std::string& text, int x, int y,
                      int scale, const Color& color, double alpha) {
  int pen_x = x;
  for (const char ch : text) {
    const Glyph* glyph = font5x7_lookup(ch);
    if (glyph != nullptr) {
      for (int row = 0; row < 7; ++row) {
        for (int col = 0; col < 5; ++col) {
          if (((*glyph)[row] >> (4 - col) & 1) == 0) continue;
          for (int dy = 0; dy < scale; ++dy)
            for (int dx = 0; dx < scale; ++dx)
              blend_pixel(img, pen_x + col * scale + dx, y + row * scale + dy,
                          color, alpha);
        }
      }
    }
    pen_x += 6 * scale;  // 5 px glyph + 1 px spacing
  }
}

inline void draw_box_outline(ImageRgb& img, const BBox& box, int thickness,
                             const Color& color, double alpha) {
  for (int t = 0; t < thickness; ++t) {
    for (int x = box.x; x < box.x + box.w; ++x) {
      blend_pixel(img, x, box.y + t, color, alpha);
      blend_pixel(img, x, box.y + box.h - 1 - t, color, alpha);
    }
    for (int y = box.y + thickness; y < box.y + box.h - thickness; ++y) {
      blend_pixel(img, box.x + t, y, color, alpha);
      blend_pixel(img, box.x + box.w - 1 - t, y, color, alpha);
    }
  }
}

inline std::string format_score(double score) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", score);
  return buf;
}

}  // namespace detail

/// Alpha-blends each detection mask over the frame with the palette color of
/// its position index, then draws the box outline and the "label score" text
/// when enabled. The input image is not modified.
inline ImageRgb composite_overlay(const ImageRgb& frame, const FrameDetections& dets,
                                  const OverlayStyle& style) {
  if (style.alpha < 0.0 || style.alpha > 1.0)
    raise(errc::out_of_range, "alpha outside [0, 1]");
  if (style.palette.empty()) raise(errc::bad_geometry, "palette must be non-empty");
  ImageRgb out = frame;
  const double alpha = style.alpha;
  for (std::size_t k = 0; k < dets.detections.size(); ++k) {
    const Detection& det = dets.detections[k];
    if (det.mask.width != frame.width || det.mask.height != frame.height)
      raise(errc::dimension_mismatch,
            "detection mask does not match frame dimensions");
    const Color color = style.palette[k % style.palette.size()];
    const BinaryMask mask = rle_decode(det.mask);
    for (int y = 0; y < out.height; ++y) {
      for (int x = 0; x < out.width; ++x) {
        if (!mask.at(x, y)) continue;
        std::uint8_t* p = out.at(x, y);
        p[0] = clamp_channel((1.0 - alpha) * p[0] + alpha * color.r);
        p[1] = clamp_channel((1.0 - alpha) * p[1] + alpha * color.g);
        p[2] = clamp_channel((1.0 - alpha) * p[2] + alpha * color.b);
      }
    }
    if (style.draw_boxes) detail::draw_box_outline(out, det.bbox, 2, color, alpha);
    if (style.draw_labels) {
      const std::string text = det.label + " " + detail::format_score(det.score);
      const int scale = std::max(1, style.label_scale);
      int ty = det.bbox.y - 7 * scale - 3;
      if (ty < 0) ty = det.bbox.y + 2;
      detail::draw_text(out, text, det.bbox.x, ty, scale, color, alpha);
    }
  }
  return out;
}

/// Appends the indication strip below the frame.
inline ImageRgb attach_timeline(const ImageRgb& frame, const ImageRgb& strip) {
  if (strip.width != frame.width)
    raise(errc::dimension_mismatch, "strip width does not match frame width");
  ImageRgb out;
  out.width = frame.width;
  out.height = frame.height + strip.height;
  out.pixels.reserve(frame.pixels.size() + strip.pixels.size());
  out.pixels.insert(out.pixels.end(), frame.pixels.begin(), frame.pixels.end());
  out.pixels.insert(out.pixels.end(), strip.pixels.begin(), strip.pixels.end());
  return out;
}

/// Default strip height used by the pipeline when none is configured.
inline int default_timeline_height(int frame_height) {
  return std::max(8, frame_height / 60);
}

}  // namespace lesionseg
