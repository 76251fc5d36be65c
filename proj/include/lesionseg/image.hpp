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

#include <cassert>
#include <cmath>
#include <cstdint>
#include <vector>

#include "lesionseg/error.hpp"

namespace lesionseg {

/// 8-bit RGB raster, row-major, three bytes per pixel.
struct ImageRgb {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  static ImageRgb filled(int w, int h, std::uint8_t r, std::uint8_t g,
                         std::uint8_t b) {
    if (w < 1 || h < 1) raise(errc::bad_geometry, "image dimensions must be >= 1");
    ImageRgb img;
    img.width = w;
    img.height = h;
    img.pixels.resize(static_cast<std::size_t>(w) * h * 3);
    for (std::size_t i = 0; i < img.pixels.size(); i += 3) {
      img.pixels[i] = r;
      img.pixels[i + 1] = g;
      img.pixels[i + 2] = b;
    }
    return img;
  }

  static ImageRgb black(int w, int h) { return filled(w, h, 0, 0, 0); }

  std::uint8_t* at(int x, int y) {
    assert(x >= 0 && x < width && y >= 0 && y < height);
    return pixels.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }
  const std::uint8_t* at(int x, int y) const {
    assert(x >= 0 && x < width && y >= 0 && y < height);
    return pixels.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }

  bool same_size(const ImageRgb& other) const {
    return width == other.width && height == other.height;
  }

  friend bool operator==(const ImageRgb&, const ImageRgb&) = default;
};

/// One decoded video frame. Indices are consecutive from 0 within a stream.
struct Frame {
  std::int64_t index = 0;
  ImageRgb image;

  friend bool operator==(const Frame&, const Frame&) = default;
};

/// Rounds half away from zero. All 8-bit channel math in the library uses
/// this rule so that outputs are reproducible across implementations.
inline int round_half_away(double v) {
  return static_cast<int>(v >= 0.0 ? std::floor(v + 0.5) : std::ceil(v - 0.5));
}

inline std::uint8_t clamp_channel(double v) {
  int r = round_half_away(v);
  if (r < 0) r = 0;
  if (r > 255) r = 255;
  return static_cast<std::uint8_t>(r);
}

/// Bilinear resampling with edge clamping. Sampling an image at its own size
/// is an exact copy.
inline ImageRgb resize_bilinear(const ImageRgb& src, int out_w, int out_h) {
  if (out_w < 1 || out_h < 1) raise(errc::bad_geometry, "resize target must be >= 1");
  if (src.width < 1 || src.height < 1) raise(errc::bad_geometry, "empty source image");
  ImageRgb out;
  out.width = out_w;
  out.height = out_h;
  out.pixels.resize(static_cast<std::size_t>(out_w) * out_h * 3);

  const double sx = static_cast<double>(src.width) / out_w;
  const double sy = static_cast<double>(src.height) / out_h;
  for (int y = 0; y < out_h; ++y) {
    double v = (y + 0.5) * sy - 0.5;
    if (v < 0) v = 0;
    if (v > src.height - 1) v = src.height - 1;
    const int y0 = static_cast<int>(std::floor(v));
    const int y1 = y0 + 1 < src.height ? y0 + 1 : y0;
    const double fy = v - y0;
    for (int x = 0; x < out_w; ++x) {
      double u = (x + 0.5) * sx - 0.5;
      if (u < 0) u = 0;
      if (u > src.width - 1) u = src.width - 1;
      const int x0 = static_cast<int>(std::floor(u));
      const int x1 = x0 + 1 < src.width ? x0 + 1 : x0;
      const double fx = u - x0;

      const std::uint8_t* p00 = src.at(x0, y0);
      const std::uint8_t* p10 = src.at(x1, y0);
      const std::uint8_t* p01 = src.at(x0, y1);
      const std::uint8_t* p11 = src.at(x1, y1);
      std::uint8_t* dst = out.at(x, y);
      for (int c = 0; c < 3; ++c) {
        const double top = p00[c] + (p10[c] - p00[c]) * fx;
        const double bot = p01[c] + (p11[c] - p01[c]) * fx;
        dst[c] = clamp_channel(top + (bot - top) * fy);
      }
    }
  }
  return out;
}

}  // namespace lesionseg
