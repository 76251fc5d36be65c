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
#include <vector>

#include "lesionseg/error.hpp"
#include "lesionseg/mask.hpp"

namespace lesionseg {

struct Point {
  double x = 0.0;
  double y = 0.0;

  friend bool operator==(const Point&, const Point&) = default;
};

/// Closed region boundary in pixel coordinates, >= 3 vertices. The closing
/// edge from the last vertex back to the first is implicit.
struct Polygon {
  std::vector<Point> vertices;

  friend bool operator==(const Polygon&, const Polygon&) = default;
};

/// Scanline even-odd fill. A pixel (i, j) is foreground iff its center
/// (i + 0.5, j + 0.5) lies inside the polygon under the even-odd rule: the
/// number of polygon edges crossed by the horizontal ray going right from the
/// center is odd. Edges touching the scanline at an endpoint are counted
/// half-open so vertex crossings are never double counted. Geometry outside
/// the frame clips naturally because only pixel centers are tested.
inline BinaryMask polygon_rasterize(const Polygon& poly, int width, int height) {
  if (poly.vertices.size() < 3)
    raise(errc::degenerate_polygon,
          "polygon needs >= 3 vertices, got " + std::to_string(poly.vertices.size()));
  if (width < 1 || height < 1)
    raise(errc::bad_geometry, "raster dimensions must be >= 1");

  BinaryMask mask = BinaryMask::zeros(width, height);
  const std::size_t n = poly.vertices.size();
  std::vector<double> crossings;
  crossings.reserve(n);

  for (int j = 0; j < height; ++j) {
    const double yc = j + 0.5;
    crossings.clear();
    for (std::size_t a = 0, b = n - 1; a < n; b = a++) {
      const Point& p = poly.vertices[a];
      const Point& q = poly.vertices[b];
      if ((p.y > yc) == (q.y > yc)) continue;  // half-open span test
      crossings.push_back((q.x - p.x) * (yc - p.y) / (q.y - p.y) + p.x);
    }
    if (crossings.empty()) continue;
    std::sort(crossings.begin(), crossings.end());

    // Pixel center xc is inside iff an odd number of crossings lies strictly
    // to its right. Walk crossings and pixels together.
    const std::size_t m = crossings.size();
    std::size_t c = 0;  // crossings <= xc so far
    for (int i = 0; i < width; ++i) {
      const double xc = i + 0.5;
      while (c < m && crossings[c] <= xc) ++c;
      if ((m - c) % 2 == 1) mask.set(i, j, true);
    }
  }
  return mask;
}

}  // namespace lesionseg
