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
//
// Test-only oracles, written independently of the library implementations
// they check: per-pixel point-in-polygon rasterization, direct-scan
// interpolated AP, and a from-scratch matching + pooling evaluator.

#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <numeric>
#include <vector>

#include "lesionseg/detection.hpp"
#include "lesionseg/mask.hpp"
#include "lesionseg/polygon.hpp"

namespace oracle {

/// Classic even-odd crossing test (PNPOLY) for a single point.
inline bool point_in_polygon(const lesionseg::Polygon& poly, double px, double py) {
  bool inside = false;
  const auto& v = poly.vertices;
  const std::size_t n = v.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    if ((v[i].y > py) != (v[j].y > py) &&
        px < (v[j].x - v[i].x) * (py - v[i].y) / (v[j].y - v[i].y) + v[i].x)
      inside = !inside;
  }
  return inside;
}

/// Per-pixel brute force rasterization at pixel centers.
inline lesionseg::BinaryMask rasterize_bruteforce(const lesionseg::Polygon& poly,
                                                  int width, int height) {
  lesionseg::BinaryMask mask = lesionseg::BinaryMask::zeros(width, height);
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x)
      if (point_in_polygon(poly, x + 0.5, y + 0.5)) mask.set(x, y, true);
  return mask;
}

/// Element-by-element IoU.
inline double mask_iou_bruteforce(const lesionseg::BinaryMask& a,
                                  const lesionseg::BinaryMask& b) {
  std::int64_t inter = 0, uni = 0;
  for (int y = 0; y < a.height; ++y)
    for (int x = 0; x < a.width; ++x) {
      const bool pa = a.at(x, y), pb = b.at(x, y);
      if (pa && pb) ++inter;
      if (pa || pb) ++uni;
    }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

struct Outcome {
  double score = 0.0;
  bool tp = false;
};

/// Direct-scan 101-point interpolated AP: builds every PR point, then for
/// each recall level scans all points for the maximum precision at recall >=
/// the level. No envelope, no binary search.
inline double average_precision_bruteforce(std::vector<Outcome> outcomes,
                                           std::int64_t total_gts) {
  if (total_gts == 0) return outcomes.empty() ? -1.0 : 0.0;  // -1 = undefined
  std::stable_sort(outcomes.begin(), outcomes.end(),
                   [](const Outcome& a, const Outcome& b) { return a.score > b.score; });
  std::vector<double> precision, recall;
  std::int64_t tp = 0, fp = 0;
  for (const Outcome& o : outcomes) {
    o.tp ? ++tp : ++fp;
    precision.push_back(static_cast<double>(tp) / static_cast<double>(tp + fp));
    recall.push_back(static_cast<double>(tp) / static_cast<double>(total_gts));
  }
  double sum = 0.0;
  for (int k = 0; k <= 100; ++k) {
    const double level = k / 100.0;
    double best = 0.0;
    for (std::size_t i = 0; i < precision.size(); ++i)
      if (recall[i] >= level) best = std::max(best, precision[i]);
    sum += best;
  }
  return sum / 101.0;
}

struct EvalInstance {
  // frame id -> (prediction masks with scores, ground-truth masks)
  struct FrameCase {
    std::vector<lesionseg::BinaryMask> pred_masks;
    std::vector<double> pred_scores;
    std::vector<lesionseg::BinaryMask> gt_masks;
  };
  std::map<std::int64_t, FrameCase> frames;
};

/// From-scratch evaluation at one threshold: greedy matching (score order,
/// best remaining ground truth by IoU), pooled over frames in id order.
inline double evaluate_bruteforce(const EvalInstance& inst, double threshold) {
  std::vector<Outcome> pool;
  std::int64_t total_gts = 0;
  for (const auto& [frame_id, fc] : inst.frames) {
    (void)frame_id;
    total_gts += static_cast<std::int64_t>(fc.gt_masks.size());
    const std::size_t np = fc.pred_masks.size();
    std::vector<std::size_t> order(np);
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      return fc.pred_scores[a] > fc.pred_scores[b];
    });
    std::vector<bool> taken(fc.gt_masks.size(), false);
    std::vector<bool> is_tp(np, false);
    for (const std::size_t p : order) {
      double best = -1.0;
      std::size_t best_g = fc.gt_masks.size();
      for (std::size_t g = 0; g < fc.gt_masks.size(); ++g) {
        if (taken[g]) continue;
        const double iou = mask_iou_bruteforce(fc.pred_masks[p], fc.gt_masks[g]);
        if (iou > best) {
          best = iou;
          best_g = g;
        }
      }
      if (best_g != fc.gt_masks.size() && best >= threshold) {
        taken[best_g] = true;
        is_tp[p] = true;
      }
    }
    for (std::size_t p = 0; p < np; ++p)
      pool.push_back(Outcome{fc.pred_scores[p], is_tp[p]});
  }
  return average_precision_bruteforce(std::move(pool), total_gts);
}

}  // namespace oracle
