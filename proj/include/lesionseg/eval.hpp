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
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "lesionseg/detection.hpp"
#include "lesionseg/error.hpp"
#include "lesionseg/mask.hpp"
#include "lesionseg/polygon.hpp"

namespace lesionseg {

// ---------------------------------------------------------------------------
// Ground truth
// ---------------------------------------------------------------------------

/// One annotated region: possibly several polygons whose rasterized masks
/// are OR-ed together (multi-part regions).
struct GtAnnotation {
  std::int64_t id = 0;
  std::string label;
  std::vector<Polygon> polygons;
};

struct GtFrame {
  std::int64_t id = 0;
  int width = 0;
  int height = 0;
  std::string file_name;
  std::vector<GtAnnotation> annotations;
};

struct GroundTruthSet {
  std::vector<GtFrame> frames;  // sorted by id
  std::vector<std::string> categories;

  const GtFrame* find_frame(std::int64_t id) const {
    auto it = std::lower_bound(
        frames.begin(), frames.end(), id,
        [](const GtFrame& f, std::int64_t v) { return f.id < v; });
    return it != frames.end() && it->id == id ? &*it : nullptr;
  }

  std::int64_t annotation_count() const {
    std::int64_t n = 0;
    for (const auto& f : frames) n += static_cast<std::int64_t>(f.annotations.size());
    return n;
  }
};

inline BinaryMask rasterize_annotation(const GtAnnotation& ann, int width,
                                       int height) {
  BinaryMask mask = BinaryMask::zeros(width, height);
  for (const Polygon& poly : ann.polygons) {
    const BinaryMask part = polygon_rasterize(poly, width, height);
    for (std::size_t i = 0; i < mask.bits.size(); ++i) mask.bits[i] |= part.bits[i];
  }
  return mask;
}

// ---------------------------------------------------------------------------
// IoU and matching
// ---------------------------------------------------------------------------

/// |A∩B| / |A∪B|; 0 when both masks are empty.
inline double mask_iou(const BinaryMask& a, const BinaryMask& b) {
  if (!a.same_size(b))
    raise(errc::dimension_mismatch, "masks have different dimensions");
  std::int64_t inter = 0, uni = 0;
  for (std::size_t i = 0; i < a.bits.size(); ++i) {
    inter += a.bits[i] & b.bits[i];
    uni += a.bits[i] | b.bits[i];
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

struct MatchPair {
  std::size_t prediction = 0;
  std::size_t ground_truth = 0;
  double iou = 0.0;
};

struct MatchResult {
  std::vector<MatchPair> pairs;
  std::vector<std::size_t> unmatched_predictions;
  std::vector<std::size_t> unmatched_ground_truths;
};

namespace detail {

/// Greedy matching over a precomputed IoU matrix: predictions in descending
/// score order (ties by input index), each taking the unmatched ground truth
/// with the highest IoU (ties by lowest index) provided IoU >= threshold,
/// inclusively.
inline MatchResult match_from_ious(const std::vector<std::vector<double>>& ious,
                                   const std::vector<double>& scores,
                                   std::size_t num_gts, double iou_threshold) {
  const std::size_t num_preds = scores.size();

  std::vector<std::size_t> order(num_preds);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] > scores[b];
  });

  MatchResult result;
  std::vector<bool> gt_taken(num_gts, false);
  std::vector<bool> pred_matched(num_preds, false);
  for (const std::size_t p : order) {
    double best = -1.0;
    std::size_t best_gt = num_gts;
    for (std::size_t g = 0; g < num_gts; ++g) {
      if (gt_taken[g]) continue;
      if (ious[p][g] > best) {
        best = ious[p][g];
        best_gt = g;
      }
    }
    if (best_gt != num_gts && best >= iou_threshold) {
      gt_taken[best_gt] = true;
      pred_matched[p] = true;
      result.pairs.push_back(MatchPair{p, best_gt, best});
    }
  }
  for (std::size_t p = 0; p < num_preds; ++p)
    if (!pred_matched[p]) result.unmatched_predictions.push_back(p);
  for (std::size_t g = 0; g < num_gts; ++g)
    if (!gt_taken[g]) result.unmatched_ground_truths.push_back(g);
  return result;
}

}  // namespace detail

inline MatchResult match_detections(const std::vector<Detection>& preds,
                                    const std::vector<BinaryMask>& gts,
                                    double iou_threshold) {
  std::vector<BinaryMask> pred_masks;
  pred_masks.reserve(preds.size());
  for (const auto& det : preds) pred_masks.push_back(rle_decode(det.mask));
  for (const auto& m : gts) {
    if (!pred_masks.empty() && !m.same_size(pred_masks[0]))
      raise(errc::dimension_mismatch, "ground-truth mask dimensions differ");
  }
  std::vector<std::vector<double>> ious(preds.size(),
                                        std::vector<double>(gts.size(), 0.0));
  std::vector<double> scores(preds.size(), 0.0);
  for (std::size_t p = 0; p < preds.size(); ++p) {
    scores[p] = preds[p].score;
    for (std::size_t g = 0; g < gts.size(); ++g)
      ious[p][g] = mask_iou(pred_masks[p], gts[g]);
  }
  return detail::match_from_ious(ious, scores, gts.size(), iou_threshold);
}

// ---------------------------------------------------------------------------
// Average precision
// ---------------------------------------------------------------------------

struct ScoredOutcome {
  double score = 0.0;
  bool true_positive = false;
};

/// 101-point interpolated AP: detections sorted by descending score (ties by
/// input order), cumulative precision/recall points, then the mean over
/// recall levels {0.00, 0.01, ..., 1.00} of the maximum precision at any
/// recall >= the level. Implemented as a right-to-left precision envelope
/// plus binary search per level; the test suite checks it against a direct
/// scan oracle.
inline double average_precision(std::vector<ScoredOutcome> outcomes,
                                std::int64_t total_ground_truths) {
  if (total_ground_truths < 0)
    raise(errc::out_of_range, "total_ground_truths must be >= 0");
  if (total_ground_truths == 0) {
    if (outcomes.empty())
      raise(errc::no_ground_truth_no_prediction,
            "AP undefined without ground truths or predictions");
    return 0.0;  // every detection is a false positive
  }
  std::stable_sort(outcomes.begin(), outcomes.end(),
                   [](const ScoredOutcome& a, const ScoredOutcome& b) {
                     return a.score > b.score;
                   });
  const std::size_t m = outcomes.size();
  std::vector<double> recall(m), envelope(m);
  std::int64_t tp = 0, fp = 0;
  for (std::size_t i = 0; i < m; ++i) {
    outcomes[i].true_positive ? ++tp : ++fp;
    recall[i] = static_cast<double>(tp) / static_cast<double>(total_ground_truths);
    envelope[i] = static_cast<double>(tp) / static_cast<double>(tp + fp);
  }
  for (std::size_t i = m; i-- > 1;)
    envelope[i - 1] = std::max(envelope[i - 1], envelope[i]);

  double sum = 0.0;
  for (int k = 0; k <= 100; ++k) {
    const double level = k / 100.0;
    const auto it = std::lower_bound(recall.begin(), recall.end(), level);
    if (it != recall.end()) sum += envelope[static_cast<std::size_t>(it - recall.begin())];
  }
  return sum / 101.0;
}

// ---------------------------------------------------------------------------
// Dataset-level evaluation
// ---------------------------------------------------------------------------

struct EvalReport {
  std::vector<std::pair<double, double>> per_threshold_ap;  // (threshold, AP)
  double map_50 = std::numeric_limits<double>::quiet_NaN();
  double map_50_95 = std::numeric_limits<double>::quiet_NaN();

  std::optional<double> ap_at(double threshold) const {
    for (const auto& [t, ap] : per_threshold_ap)
      if (std::abs(t - threshold) < 1e-9) return ap;
    return std::nullopt;
  }
};

/// The standard sweep: 0.50 to 0.95 in 0.05 steps.
inline std::vector<double> coco_iou_thresholds() {
  std::vector<double> out;
  for (int k = 0; k < 10; ++k) out.push_back(0.50 + 0.05 * k);
  return out;
}

/// Matches per frame at each threshold, pools outcomes over all frames into
/// one PR curve, and computes AP once per threshold. Frames appear in
/// ascending id order and detections in input order, which fixes tie
/// resolution. Frames with neither annotations nor predictions contribute
/// nothing.
inline EvalReport evaluate(
    const std::map<std::int64_t, std::vector<Detection>>& preds,
    const GroundTruthSet& gt,
    const std::vector<double>& thresholds = coco_iou_thresholds()) {
  for (const auto& [frame_id, dets] : preds) {
    (void)dets;
    if (gt.find_frame(frame_id) == nullptr)
      raise(errc::unknown_frame,
            "predictions reference frame " + std::to_string(frame_id) +
                " absent from the ground truth");
  }

  // Per frame, decode/rasterize masks and compute the IoU matrix once; the
  // matrix is threshold independent.
  struct FrameData {
    std::vector<double> scores;
    std::vector<std::vector<double>> ious;
    std::size_t gt_count = 0;
  };
  std::vector<FrameData> frame_data;
  frame_data.reserve(gt.frames.size());
  for (const GtFrame& frame : gt.frames) {
    FrameData data;
    std::vector<BinaryMask> gt_masks;
    gt_masks.reserve(frame.annotations.size());
    for (const auto& ann : frame.annotations)
      gt_masks.push_back(rasterize_annotation(ann, frame.width, frame.height));
    data.gt_count = gt_masks.size();

    const auto it = preds.find(frame.id);
    if (it != preds.end()) {
      data.scores.reserve(it->second.size());
      data.ious.reserve(it->second.size());
      for (const Detection& det : it->second) {
        if (det.mask.width != frame.width || det.mask.height != frame.height)
          raise(errc::dimension_mismatch,
                "prediction mask does not match frame " +
                    std::to_string(frame.id) + " dimensions");
        const BinaryMask pred_mask = rle_decode(det.mask);
        std::vector<double> row;
        row.reserve(gt_masks.size());
        for (const auto& gm : gt_masks) row.push_back(mask_iou(pred_mask, gm));
        data.ious.push_back(std::move(row));
        data.scores.push_back(det.score);
      }
    }
    frame_data.push_back(std::move(data));
  }

  EvalReport report;
  for (const double t : thresholds) {
    std::vector<ScoredOutcome> pool;
    std::int64_t total_gts = 0;
    for (const FrameData& data : frame_data) {
      total_gts += static_cast<std::int64_t>(data.gt_count);
      const MatchResult mr =
          detail::match_from_ious(data.ious, data.scores, data.gt_count, t);
      std::vector<bool> matched(data.scores.size(), false);
      for (const auto& pair : mr.pairs) matched[pair.prediction] = true;
      for (std::size_t p = 0; p < data.scores.size(); ++p)
        pool.push_back(ScoredOutcome{data.scores[p], matched[p]});
    }
    report.per_threshold_ap.emplace_back(t, average_precision(std::move(pool), total_gts));
  }

  if (const auto ap = report.ap_at(0.50)) report.map_50 = *ap;
  double sweep_sum = 0.0;
  bool sweep_complete = true;
  for (const double t : coco_iou_thresholds()) {
    const auto ap = report.ap_at(t);
    if (!ap) {
      sweep_complete = false;
      break;
    }
    sweep_sum += *ap;
  }
  if (sweep_complete) report.map_50_95 = sweep_sum / 10.0;
  return report;
}

// ---------------------------------------------------------------------------
// Annotation file loading
// ---------------------------------------------------------------------------

namespace detail {

inline void require_keys(const nlohmann::ordered_json& obj,
                         std::initializer_list<const char*> required,
                         std::initializer_list<const char*> optional,
                         const std::string& where) {
  for (const char* key : required)
    if (!obj.contains(key))
      raise(errc::schema_error, where + ": missing key '" + key + "'");
  for (const auto& [key, value] : obj.items()) {
    (void)value;
    bool known = false;
    for (const char* k : required) known = known || key == k;
    for (const char* k : optional) known = known || key == k;
    if (!known) raise(errc::schema_error, where + ": unknown key '" + key + "'");
  }
}

}  // namespace detail

/// Parses the annotation file: {frames: [{id, width, height, file_name}],
/// annotations: [{id, frame_id, label, polygons: [[x0,y0,x1,y1,...]]}],
/// categories: [...]}. Polygons are flat coordinate lists; coordinates must
/// lie inside their frame and labels inside the category list.
inline GroundTruthSet load_ground_truth(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) raise(errc::not_found, "cannot open " + path.string());
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    raise(errc::parse_error, path.string() + ": " + e.what());
  }
  if (!j.is_object()) raise(errc::schema_error, "top level must be an object");
  try {
  detail::require_keys(j, {"frames", "annotations", "categories"}, {}, "top level");

  GroundTruthSet gt;
  for (const auto& c : j.at("categories")) {
    if (!c.is_string()) raise(errc::schema_error, "categories must be strings");
    gt.categories.push_back(c.get<std::string>());
  }

  if (!j.at("frames").is_array()) raise(errc::schema_error, "frames must be an array");
  for (const auto& jf : j.at("frames")) {
    const std::string where = "frame entry";
    if (!jf.is_object()) raise(errc::schema_error, where + " must be an object");
    detail::require_keys(jf, {"id", "width", "height", "file_name"}, {}, where);
    GtFrame frame;
    if (!jf.at("id").is_number_integer() || !jf.at("width").is_number_integer() ||
        !jf.at("height").is_number_integer() || !jf.at("file_name").is_string())
      raise(errc::schema_error, where + ": wrong field type");
    frame.id = jf.at("id").get<std::int64_t>();
    frame.width = jf.at("width").get<int>();
    frame.height = jf.at("height").get<int>();
    frame.file_name = jf.at("file_name").get<std::string>();
    if (frame.width < 1 || frame.height < 1)
      raise(errc::schema_error, "frame " + std::to_string(frame.id) +
                                    ": dimensions must be >= 1");
    gt.frames.push_back(std::move(frame));
  }
  std::sort(gt.frames.begin(), gt.frames.end(),
            [](const GtFrame& a, const GtFrame& b) { return a.id < b.id; });
  for (std::size_t i = 1; i < gt.frames.size(); ++i)
    if (gt.frames[i].id == gt.frames[i - 1].id)
      raise(errc::duplicate_id,
            "duplicate frame id " + std::to_string(gt.frames[i].id));

  if (!j.at("annotations").is_array())
    raise(errc::schema_error, "annotations must be an array");
  std::vector<std::int64_t> seen_ids;
  for (const auto& ja : j.at("annotations")) {
    if (!ja.is_object()) raise(errc::schema_error, "annotation must be an object");
    detail::require_keys(ja, {"id", "frame_id", "label", "polygons"}, {},
                         "annotation");
    if (!ja.at("id").is_number_integer() || !ja.at("frame_id").is_number_integer() ||
        !ja.at("label").is_string() || !ja.at("polygons").is_array())
      raise(errc::schema_error, "annotation: wrong field type");
    GtAnnotation ann;
    ann.id = ja.at("id").get<std::int64_t>();
    ann.label = ja.at("label").get<std::string>();
    const std::int64_t frame_id = ja.at("frame_id").get<std::int64_t>();
    const std::string where = "annotation " + std::to_string(ann.id);

    if (std::find(seen_ids.begin(), seen_ids.end(), ann.id) != seen_ids.end())
      raise(errc::duplicate_id, "duplicate annotation id " + std::to_string(ann.id));
    seen_ids.push_back(ann.id);

    auto frame_it = std::find_if(gt.frames.begin(), gt.frames.end(),
                                 [&](const GtFrame& f) { return f.id == frame_id; });
    if (frame_it == gt.frames.end())
      raise(errc::schema_error,
            where + ": references missing frame " + std::to_string(frame_id));
    if (std::find(gt.categories.begin(), gt.categories.end(), ann.label) ==
        gt.categories.end())
      raise(errc::schema_error, where + ": label '" + ann.label +
                                    "' not in the category list");

    for (const auto& jp : ja.at("polygons")) {
      if (!jp.is_array() || jp.size() < 6 || jp.size() % 2 != 0)
        raise(errc::schema_error,
              where + ": polygon needs an even list of >= 6 coordinates");
      Polygon poly;
      for (std::size_t i = 0; i < jp.size(); i += 2) {
        if (!jp[i].is_number() || !jp[i + 1].is_number())
          raise(errc::schema_error, where + ": polygon coordinates must be numbers");
        const double x = jp[i].get<double>();
        const double y = jp[i + 1].get<double>();
        if (x < 0 || x > frame_it->width || y < 0 || y > frame_it->height)
          raise(errc::schema_error, where + ": vertex outside the frame");
        poly.vertices.push_back(Point{x, y});
      }
      ann.polygons.push_back(std::move(poly));
    }
    frame_it->annotations.push_back(std::move(ann));
  }
  return gt;
  } catch (const nlohmann::json::exception& e) {
    raise(errc::schema_error, e.what());
  }
}

/// Inverse of load_ground_truth, used by the dataset split tooling. Field
/// names and orders match the loader exactly.
inline void write_ground_truth(const GroundTruthSet& gt,
                               const std::filesystem::path& path) {
  nlohmann::ordered_json j;
  j["frames"] = nlohmann::ordered_json::array();
  for (const auto& f : gt.frames) {
    nlohmann::ordered_json jf;
    jf["id"] = f.id;
    jf["width"] = f.width;
    jf["height"] = f.height;
    jf["file_name"] = f.file_name;
    j["frames"].push_back(std::move(jf));
  }
  j["annotations"] = nlohmann::ordered_json::array();
  for (const auto& f : gt.frames) {
    for (const auto& ann : f.annotations) {
      nlohmann::ordered_json ja;
      ja["id"] = ann.id;
      ja["frame_id"] = f.id;
      ja["label"] = ann.label;
      ja["polygons"] = nlohmann::ordered_json::array();
      for (const auto& poly : ann.polygons) {
        nlohmann::ordered_json jp = nlohmann::ordered_json::array();
        for (const auto& v : poly.vertices) {
          jp.push_back(v.x);
          jp.push_back(v.y);
        }
        ja["polygons"].push_back(std::move(jp));
      }
      j["annotations"].push_back(std::move(ja));
    }
  }
  j["categories"] = gt.categories;

  std::ofstream out(path);
  if (!out) raise(errc::encode_failure, "cannot write " + path.string());
  out << j.dump(2) << "\n";
}

}  // namespace lesionseg
