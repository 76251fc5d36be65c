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
#include <cstdint>
#include <string>
#include <vector>

#include "lesionseg/error.hpp"

namespace lesionseg {

/// Per-detection pixel mask. Bits are row-major, one byte per pixel, 0 or 1.
struct BinaryMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> bits;

  static BinaryMask zeros(int w, int h) {
    if (w < 1 || h < 1) raise(errc::bad_geometry, "mask dimensions must be >= 1");
    BinaryMask m;
    m.width = w;
    m.height = h;
    m.bits.assign(static_cast<std::size_t>(w) * h, 0);
    return m;
  }

  bool at(int x, int y) const {
    assert(x >= 0 && x < width && y >= 0 && y < height);
    return bits[static_cast<std::size_t>(y) * width + x] != 0;
  }
  void set(int x, int y, bool v) {
    assert(x >= 0 && x < width && y >= 0 && y < height);
    bits[static_cast<std::size_t>(y) * width + x] = v ? 1 : 0;
  }

  std::int64_t foreground_count() const {
    std::int64_t n = 0;
    for (std::uint8_t b : bits) n += b != 0;
    return n;
  }

  bool same_size(const BinaryMask& other) const {
    return width == other.width && height == other.height;
  }

  friend bool operator==(const BinaryMask&, const BinaryMask&) = default;
};

/// Run-length encoded mask. Runs are counted in column-major scan order
/// (columns left to right, rows top to bottom within a column), alternating
/// starting with background. A zero is legal only as the leading run, when
/// the scan starts on foreground.
struct RleMask {
  int width = 0;
  int height = 0;
  std::vector<std::int64_t> runs;

  friend bool operator==(const RleMask&, const RleMask&) = default;
};

/// Axis-aligned box, top-left origin, y growing down.
struct BBox {
  int x = 0;
  int y = 0;
  int w = 0;
  int h = 0;

  friend bool operator==(const BBox&, const BBox&) = default;
};

inline void validate_mask(const BinaryMask& m) {
  if (m.width < 1 || m.height < 1)
    raise(errc::bad_geometry, "mask dimensions must be >= 1");
  if (m.bits.size() != static_cast<std::size_t>(m.width) * m.height)
    raise(errc::bad_geometry, "mask bit count does not match dimensions");
}

inline RleMask rle_encode(const BinaryMask& mask) {
  validate_mask(mask);
  RleMask rle;
  rle.width = mask.width;
  rle.height = mask.height;
  const std::int64_t total = static_cast<std::int64_t>(mask.width) * mask.height;
  std::uint8_t current = 0;  // background is counted first
  std::int64_t run = 0;
  for (std::int64_t k = 0; k < total; ++k) {
    const int x = static_cast<int>(k / mask.height);
    const int y = static_cast<int>(k % mask.height);
    const std::uint8_t v = mask.at(x, y) ? 1 : 0;
    if (v == current) {
      ++run;
    } else {
      rle.runs.push_back(run);
      current = v;
      run = 1;
    }
  }
  rle.runs.push_back(run);
  return rle;
}

inline BinaryMask rle_decode(const RleMask& rle) {
  if (rle.width < 1 || rle.height < 1)
    raise(errc::bad_geometry, "rle dimensions must be >= 1");
  const std::int64_t total = static_cast<std::int64_t>(rle.width) * rle.height;
  std::int64_t sum = 0;
  for (std::size_t i = 0; i < rle.runs.size(); ++i) {
    const std::int64_t r = rle.runs[i];
    if (r < 0 || (r == 0 && i > 0))
      raise(errc::interior_zero,
            "run " + std::to_string(i) + " is " + std::to_string(r));
    sum += r;
  }
  if (sum != total)
    raise(errc::sum_mismatch, "runs sum to " + std::to_string(sum) +
                                  ", expected " + std::to_string(total));

  BinaryMask mask = BinaryMask::zeros(rle.width, rle.height);
  std::int64_t k = 0;
  std::uint8_t value = 0;
  for (const std::int64_t r : rle.runs) {
    if (value) {
      for (std::int64_t i = 0; i < r; ++i, ++k) {
        const int x = static_cast<int>(k / rle.height);
        const int y = static_cast<int>(k % rle.height);
        mask.set(x, y, true);
      }
    } else {
      k += r;
    }
    value ^= 1;
  }
  return mask;
}

/// Smallest axis-aligned rectangle containing every foreground pixel.
inline BBox tight_bbox(const BinaryMask& mask) {
  validate_mask(mask);
  int min_x = mask.width, min_y = mask.height, max_x = -1, max_y = -1;
  for (int y = 0; y < mask.height; ++y) {
    const std::uint8_t* row = mask.bits.data() + static_cast<std::size_t>(y) * mask.width;
    for (int x = 0; x < mask.width; ++x) {
      if (!row[x]) continue;
      if (x < min_x) min_x = x;
      if (x > max_x) max_x = x;
      if (y < min_y) min_y = y;
      if (y > max_y) max_y = y;
    }
  }
  if (max_x < 0) raise(errc::empty_mask, "mask has no foreground pixel");
  return BBox{min_x, min_y, max_x - min_x + 1, max_y - min_y + 1};
}

/// Nearest-neighbor resample; keeps masks strictly binary. Identity when the
/// target equals the source size.
inline BinaryMask resize_nearest(const BinaryMask& src, int out_w, int out_h) {
  validate_mask(src);
  if (out_w < 1 || out_h < 1) raise(errc::bad_geometry, "resize target must be >= 1");
  BinaryMask out = BinaryMask::zeros(out_w, out_h);
  for (int y = 0; y < out_h; ++y) {
    // floor((y + 0.5) * src_h / out_h) in exact integer arithmetic
    int sy = static_cast<int>((2LL * y + 1) * src.height / (2LL * out_h));
    if (sy > src.height - 1) sy = src.height - 1;
    for (int x = 0; x < out_w; ++x) {
      int sx = static_cast<int>((2LL * x + 1) * src.width / (2LL * out_w));
      if (sx > src.width - 1) sx = src.width - 1;
      if (src.at(sx, sy)) out.set(x, y, true);
    }
  }
  return out;
}

}  // namespace lesionseg
