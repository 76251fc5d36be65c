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
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "lesionseg/error.hpp"
#include "lesionseg/image.hpp"
#include "lesionseg/mask.hpp"
#include "lesionseg/polygon.hpp"

namespace lesionseg {

/// An image with its instance masks and parallel labels. Geometric transforms
/// apply one map to the image and every mask; photometric transforms never
/// touch the masks.
struct AnnotatedImage {
  ImageRgb image;
  std::vector<BinaryMask> masks;
  std::vector<std::string> labels;
};

namespace detail {

inline void validate_annotated(const AnnotatedImage& a) {
  if (a.image.width < 1 || a.image.height < 1)
    raise(errc::bad_geometry, "image dimensions must be >= 1");
  if (a.masks.size() != a.labels.size())
    raise(errc::bad_geometry, "masks and labels are not parallel");
  for (const auto& m : a.masks)
    if (m.width != a.image.width || m.height != a.image.height)
      raise(errc::dimension_mismatch, "mask does not match image dimensions");
}

/// Bilinear sample with black outside the source; `sx, sy` in continuous
/// pixel space where pixel (i, j) has center (i+0.5, j+0.5).
inline void sample_bilinear_black(const ImageRgb& src, double sx, double sy,
                                  std::uint8_t* out) {
  const double u = sx - 0.5;
  const double v = sy - 0.5;
  const int x0 = static_cast<int>(std::floor(u));
  const int y0 = static_cast<int>(std::floor(v));
  const double fx = u - x0;
  const double fy = v - y0;
  for (int c = 0; c < 3; ++c) {
    double acc = 0.0;
    for (int dy = 0; dy < 2; ++dy) {
      for (int dx = 0; dx < 2; ++dx) {
        const int x = x0 + dx;
        const int y = y0 + dy;
        if (x < 0 || x >= src.width || y < 0 || y >= src.height) continue;
        const double w = (dx ? fx : 1.0 - fx) * (dy ? fy : 1.0 - fy);
        acc += w * src.at(x, y)[c];
      }
    }
    out[c] = clamp_channel(acc);
  }
}

inline bool sample_nearest(const BinaryMask& src, double sx, double sy) {
  const int x = static_cast<int>(std::floor(sx));
  const int y = static_cast<int>(std::floor(sy));
  if (x < 0 || x >= src.width || y < 0 || y >= src.height) return false;
  return src.at(x, y);
}

/// Exact pixel permutations for quarter-turn rotations. `quarter` in {1,2,3}
/// counts 90-degree counterclockwise turns.
inline AnnotatedImage rotate_quarter(const AnnotatedImage& a, int quarter) {
  const int w = a.image.width, h = a.image.height;
  const bool swap = quarter % 2 == 1;
  const int ow = swap ? h : w;
  const int oh = swap ? w : h;
  const auto map_source = [&](int ox, int oy) -> std::pair<int, int> {
    switch (quarter) {
      case 1: return {w - 1 - oy, ox};       // 90 deg ccw
      case 2: return {w - 1 - ox, h - 1 - oy};
      default: return {oy, h - 1 - ox};      // 270 deg ccw
    }
  };
  AnnotatedImage out;
  out.labels = a.labels;
  out.image = ImageRgb::black(ow, oh);
  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      const auto [sx, sy] = map_source(ox, oy);
      const std::uint8_t* s = a.image.at(sx, sy);
      std::uint8_t* d = out.image.at(ox, oy);
      d[0] = s[0];
      d[1] = s[1];
      d[2] = s[2];
    }
  }
  for (const auto& m : a.masks) {
    BinaryMask om = BinaryMask::zeros(ow, oh);
    for (int oy = 0; oy < oh; ++oy)
      for (int ox = 0; ox < ow; ++ox) {
        const auto [sx, sy] = map_source(ox, oy);
        if (m.at(sx, sy)) om.set(ox, oy, true);
      }
    out.masks.push_back(std::move(om));
  }
  return out;
}

}  // namespace detail

/// Rotation about the image center onto a canvas sized to the rotated
/// bounds. Images sample bilinearly (black outside), masks nearest-neighbor.
/// Multiples of 90 degrees take an exact permutation path, so foreground
/// counts are preserved bit for bit.
inline AnnotatedImage rotate_pair(const AnnotatedImage& a, double angle_deg) {
  detail::validate_annotated(a);
  double norm = std::fmod(angle_deg, 360.0);
  if (norm < 0) norm += 360.0;
  if (norm == 0.0) return a;
  if (norm == 90.0 || norm == 180.0 || norm == 270.0)
    return detail::rotate_quarter(a, static_cast<int>(norm / 90.0));

  const double rad = norm * 3.14159265358979323846 / 180.0;
  const double c = std::cos(rad), s = std::sin(rad);
  const int w = a.image.width, h = a.image.height;
  const int ow = std::max(1, static_cast<int>(std::lround(
                                 w * std::abs(c) + h * std::abs(s))));
  const int oh = std::max(1, static_cast<int>(std::lround(
                                 w * std::abs(s) + h * std::abs(c))));
  const double icx = w / 2.0, icy = h / 2.0;
  const double ocx = ow / 2.0, ocy = oh / 2.0;

  AnnotatedImage out;
  out.labels = a.labels;
  out.image = ImageRgb::black(ow, oh);
  for (std::size_t k = 0; k < a.masks.size(); ++k)
    out.masks.push_back(BinaryMask::zeros(ow, oh));
  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      // Inverse of the counterclockwise (as displayed, y down) rotation.
      const double u = ox + 0.5 - ocx;
      const double v = oy + 0.5 - ocy;
      const double sx = u * c - v * s + icx;
      const double sy = u * s + v * c + icy;
      detail::sample_bilinear_black(a.image, sx, sy, out.image.at(ox, oy));
      for (std::size_t k = 0; k < a.masks.size(); ++k)
        if (detail::sample_nearest(a.masks[k], sx, sy))
          out.masks[k].set(ox, oy, true);
    }
  }
  return out;
}

/// Crops image and masks to `region`; masks left without foreground are
/// dropped together with their labels.
inline AnnotatedImage crop_pair(const AnnotatedImage& a, const BBox& region) {
  detail::validate_annotated(a);
  if (region.w < 1 || region.h < 1 || region.x < 0 || region.y < 0 ||
      region.x + region.w > a.image.width || region.y + region.h > a.image.height)
    raise(errc::out_of_bounds, "crop region outside image bounds");

  AnnotatedImage out;
  out.image = ImageRgb::black(region.w, region.h);
  for (int y = 0; y < region.h; ++y) {
    const std::uint8_t* src = a.image.at(region.x, region.y + y);
    std::uint8_t* dst = out.image.at(0, y);
    std::copy(src, src + static_cast<std::size_t>(region.w) * 3, dst);
  }
  for (std::size_t k = 0; k < a.masks.size(); ++k) {
    BinaryMask m = BinaryMask::zeros(region.w, region.h);
    bool any = false;
    for (int y = 0; y < region.h; ++y)
      for (int x = 0; x < region.w; ++x)
        if (a.masks[k].at(region.x + x, region.y + y)) {
          m.set(x, y, true);
          any = true;
        }
    if (any) {
      out.masks.push_back(std::move(m));
      out.labels.push_back(a.labels[k]);
    }
  }
  return out;
}

/// Separable Gaussian blur of the image only; kernel radius ceil(3*sigma),
/// edges clamped. Masks and labels pass through untouched.
inline AnnotatedImage blur_image(const AnnotatedImage& a, double sigma) {
  detail::validate_annotated(a);
  if (!(sigma > 0.0)) raise(errc::out_of_range, "sigma must be > 0");

  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> kernel(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double w = std::exp(-(static_cast<double>(i) * i) / (2.0 * sigma * sigma));
    kernel[static_cast<std::size_t>(i + radius)] = w;
    sum += w;
  }
  for (double& w : kernel) w /= sum;

  const int w = a.image.width, h = a.image.height;
  const auto clamp_x = [&](int x) { return std::clamp(x, 0, w - 1); };
  const auto clamp_y = [&](int y) { return std::clamp(y, 0, h - 1); };

  std::vector<double> horizontal(static_cast<std::size_t>(w) * h * 3, 0.0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc[3] = {0, 0, 0};
      for (int i = -radius; i <= radius; ++i) {
        const std::uint8_t* p = a.image.at(clamp_x(x + i), y);
        const double kw = kernel[static_cast<std::size_t>(i + radius)];
        acc[0] += kw * p[0];
        acc[1] += kw * p[1];
        acc[2] += kw * p[2];
      }
      double* dst = &horizontal[(static_cast<std::size_t>(y) * w + x) * 3];
      dst[0] = acc[0];
      dst[1] = acc[1];
      dst[2] = acc[2];
    }

  AnnotatedImage out;
  out.masks = a.masks;
  out.labels = a.labels;
  out.image = ImageRgb::black(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      double acc[3] = {0, 0, 0};
      for (int i = -radius; i <= radius; ++i) {
        const double* p =
            &horizontal[(static_cast<std::size_t>(clamp_y(y + i)) * w + x) * 3];
        const double kw = kernel[static_cast<std::size_t>(i + radius)];
        acc[0] += kw * p[0];
        acc[1] += kw * p[1];
        acc[2] += kw * p[2];
      }
      std::uint8_t* dst = out.image.at(x, y);
      dst[0] = clamp_channel(acc[0]);
      dst[1] = clamp_channel(acc[1]);
      dst[2] = clamp_channel(acc[2]);
    }
  return out;
}

/// Blends each pixel toward its luma gray (0.299, 0.587, 0.114 weights).
/// amount 0 is the identity, amount 1 full grayscale.
inline AnnotatedImage desaturate_image(const AnnotatedImage& a, double amount) {
  detail::validate_annotated(a);
  if (amount < 0.0 || amount > 1.0)
    raise(errc::out_of_range, "amount outside [0, 1]");
  AnnotatedImage out;
  out.masks = a.masks;
  out.labels = a.labels;
  out.image = a.image;
  for (std::size_t i = 0; i < out.image.pixels.size(); i += 3) {
    const double r = out.image.pixels[i];
    const double g = out.image.pixels[i + 1];
    const double b = out.image.pixels[i + 2];
    const double gray = round_half_away(0.299 * r + 0.587 * g + 0.114 * b);
    out.image.pixels[i] = clamp_channel((1.0 - amount) * r + amount * gray);
    out.image.pixels[i + 1] = clamp_channel((1.0 - amount) * g + amount * gray);
    out.image.pixels[i + 2] = clamp_channel((1.0 - amount) * b + amount * gray);
  }
  return out;
}

namespace detail {

/// Solves the 8-unknown homography system mapping (x,y) -> (u,v) for four
/// correspondences by Gaussian elimination with partial pivoting.
inline std::array<double, 9> solve_homography(
    const std::array<Point, 4>& src, const std::array<Point, 4>& dst) {
  double m[8][9] = {};
  for (int i = 0; i < 4; ++i) {
    const double x = src[static_cast<std::size_t>(i)].x;
    const double y = src[static_cast<std::size_t>(i)].y;
    const double u = dst[static_cast<std::size_t>(i)].x;
    const double v = dst[static_cast<std::size_t>(i)].y;
    double* r0 = m[2 * i];
    double* r1 = m[2 * i + 1];
    r0[0] = x; r0[1] = y; r0[2] = 1; r0[6] = -u * x; r0[7] = -u * y; r0[8] = u;
    r1[3] = x; r1[4] = y; r1[5] = 1; r1[6] = -v * x; r1[7] = -v * y; r1[8] = v;
  }
  for (int col = 0; col < 8; ++col) {
    int pivot = col;
    for (int row = col + 1; row < 8; ++row)
      if (std::abs(m[row][col]) > std::abs(m[pivot][col])) pivot = row;
    if (std::abs(m[pivot][col]) < 1e-12)
      raise(errc::degenerate_quad, "homography system is singular");
    if (pivot != col)
      for (int k = 0; k < 9; ++k) std::swap(m[pivot][k], m[col][k]);
    for (int row = 0; row < 8; ++row) {
      if (row == col) continue;
      const double f = m[row][col] / m[col][col];
      for (int k = col; k < 9; ++k) m[row][k] -= f * m[col][k];
    }
  }
  std::array<double, 9> hom{};
  for (int i = 0; i < 8; ++i) hom[static_cast<std::size_t>(i)] = m[i][8] / m[i][i];
  hom[8] = 1.0;
  return hom;
}

inline std::array<double, 9> invert_3x3(const std::array<double, 9>& a) {
  const double det = a[0] * (a[4] * a[8] - a[5] * a[7]) -
                     a[1] * (a[3] * a[8] - a[5] * a[6]) +
                     a[2] * (a[3] * a[7] - a[4] * a[6]);
  if (std::abs(det) < 1e-15)
    raise(errc::degenerate_quad, "homography is not invertible");
  const double inv_det = 1.0 / det;
  return {(a[4] * a[8] - a[5] * a[7]) * inv_det,
          (a[2] * a[7] - a[1] * a[8]) * inv_det,
          (a[1] * a[5] - a[2] * a[4]) * inv_det,
          (a[5] * a[6] - a[3] * a[8]) * inv_det,
          (a[0] * a[8] - a[2] * a[6]) * inv_det,
          (a[2] * a[3] - a[0] * a[5]) * inv_det,
          (a[3] * a[7] - a[4] * a[6]) * inv_det,
          (a[1] * a[6] - a[0] * a[7]) * inv_det,
          (a[0] * a[4] - a[1] * a[3]) * inv_det};
}

}  // namespace detail

/// Warps the image so its corners land on `quad` (order: top-left, top-right,
/// bottom-right, bottom-left), sampling by the inverse homography onto a
/// canvas covering the quad's bounding box. The quad must be strictly convex.
inline AnnotatedImage perspective_pair(const AnnotatedImage& a,
                                       const std::array<Point, 4>& quad) {
  detail::validate_annotated(a);
  // Strict convexity: consecutive edge cross products all share a sign.
  int sign = 0;
  for (int i = 0; i < 4; ++i) {
    const Point& p0 = quad[static_cast<std::size_t>(i)];
    const Point& p1 = quad[static_cast<std::size_t>((i + 1) % 4)];
    const Point& p2 = quad[static_cast<std::size_t>((i + 2) % 4)];
    const double cross =
        (p1.x - p0.x) * (p2.y - p1.y) - (p1.y - p0.y) * (p2.x - p1.x);
    if (cross == 0.0) raise(errc::degenerate_quad, "collinear corners");
    const int s = cross > 0 ? 1 : -1;
    if (sign == 0) sign = s;
    else if (s != sign) raise(errc::degenerate_quad, "non-convex or self-intersecting quad");
  }

  double min_x = quad[0].x, max_x = quad[0].x, min_y = quad[0].y, max_y = quad[0].y;
  for (const Point& p : quad) {
    min_x = std::min(min_x, p.x);
    max_x = std::max(max_x, p.x);
    min_y = std::min(min_y, p.y);
    max_y = std::max(max_y, p.y);
  }
  const int ow = std::max(1, static_cast<int>(std::ceil(max_x - min_x)));
  const int oh = std::max(1, static_cast<int>(std::ceil(max_y - min_y)));

  const double w = a.image.width, h = a.image.height;
  const std::array<Point, 4> src_corners = {Point{0, 0}, Point{w, 0},
                                            Point{w, h}, Point{0, h}};
  std::array<Point, 4> dst_corners = quad;
  for (Point& p : dst_corners) {
    p.x -= min_x;
    p.y -= min_y;
  }
  const std::array<double, 9> inv =
      detail::invert_3x3(detail::solve_homography(src_corners, dst_corners));

  AnnotatedImage out;
  out.labels = a.labels;
  out.image = ImageRgb::black(ow, oh);
  for (std::size_t k = 0; k < a.masks.size(); ++k)
    out.masks.push_back(BinaryMask::zeros(ow, oh));

  for (int oy = 0; oy < oh; ++oy) {
    for (int ox = 0; ox < ow; ++ox) {
      const double px = ox + 0.5, py = oy + 0.5;
      const double denom = inv[6] * px + inv[7] * py + inv[8];
      if (std::abs(denom) < 1e-12) continue;
      const double sx = (inv[0] * px + inv[1] * py + inv[2]) / denom;
      const double sy = (inv[3] * px + inv[4] * py + inv[5]) / denom;
      detail::sample_bilinear_black(a.image, sx, sy, out.image.at(ox, oy));
      for (std::size_t k = 0; k < a.masks.size(); ++k)
        if (detail::sample_nearest(a.masks[k], sx, sy)) out.masks[k].set(ox, oy, true);
    }
  }
  return out;
}

}  // namespace lesionseg
