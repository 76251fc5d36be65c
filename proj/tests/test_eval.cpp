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

#include <catch2/catch_amalgamated.hpp>
#include <fstream>
#include <random>

#include "lesionseg/eval.hpp"
#include "oracles.hpp"
#include "test_util.hpp"

using namespace lesionseg;

namespace {

BinaryMask rect_mask(int w, int h, int x0, int y0, int x1, int y1) {
  BinaryMask m = BinaryMask::zeros(w, h);
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) m.set(x, y, true);
  return m;
}

Detection detection_from_mask(const BinaryMask& m, double score) {
  Detection d;
  d.mask = rle_encode(m);
  d.bbox = tight_bbox(m);
  d.score = score;
  d.label = "lesion";
  return d;
}

}  // namespace

TEST_CASE("mask_iou basics") {
  const BinaryMask a = rect_mask(8, 8, 1, 1, 3, 3);
  CHECK(mask_iou(a, a) == 1.0);

  const BinaryMask b = rect_mask(8, 8, 4, 4, 6, 6);
  CHECK(mask_iou(a, b) == 0.0);

  // 4 px fully inside 8 px.
  const BinaryMask inner = rect_mask(8, 8, 0, 0, 2, 2);
  const BinaryMask outer = rect_mask(8, 8, 0, 0, 4, 2);
  CHECK(mask_iou(inner, outer) == 0.5);

  CHECK(mask_iou(BinaryMask::zeros(4, 4), BinaryMask::zeros(4, 4)) == 0.0);

  try {
    mask_iou(BinaryMask::zeros(4, 4), BinaryMask::zeros(5, 4));
    FAIL("expected DimensionMismatch");
  } catch (const error& e) {
    CHECK(e.code() == errc::dimension_mismatch);
  }
}

TEST_CASE("mask_iou matches the per-pixel oracle and is symmetric") {
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 40; ++trial) {
    const BinaryMask a = testutil::random_mask(rng, 12, 9, 0.4);
    const BinaryMask b = testutil::random_mask(rng, 12, 9, 0.4);
    const double iou = mask_iou(a, b);
    REQUIRE(iou == oracle::mask_iou_bruteforce(a, b));
    REQUIRE(iou == mask_iou(b, a));
    if (iou == 1.0) REQUIRE(a == b);  // 1 only for identical non-empty masks
    const auto ca = a.foreground_count(), cb = b.foreground_count();
    if (ca > 0 && cb > 0)
      REQUIRE(iou <= static_cast<double>(std::min(ca, cb)) /
                         static_cast<double>(std::max(ca, cb)) + 1e-12);
  }
}

TEST_CASE("matching pairs a perfect prediction") {
  const BinaryMask gt = rect_mask(8, 8, 2, 2, 6, 6);
  const MatchResult mr =
      match_detections({detection_from_mask(gt, 0.9)}, {gt}, 0.5);
  REQUIRE(mr.pairs.size() == 1);
  CHECK(mr.pairs[0].prediction == 0);
  CHECK(mr.pairs[0].ground_truth == 0);
  CHECK(mr.pairs[0].iou == 1.0);
  CHECK(mr.unmatched_predictions.empty());
  CHECK(mr.unmatched_ground_truths.empty());
}

TEST_CASE("greedy order: the higher score takes the ground truth") {
  const BinaryMask gt = rect_mask(8, 8, 2, 2, 6, 6);
  const std::vector<Detection> preds = {detection_from_mask(gt, 0.8),
                                        detection_from_mask(gt, 0.9)};
  const MatchResult mr = match_detections(preds, {gt}, 0.5);
  REQUIRE(mr.pairs.size() == 1);
  CHECK(mr.pairs[0].prediction == 1);  // score 0.9
  REQUIRE(mr.unmatched_predictions.size() == 1);
  CHECK(mr.unmatched_predictions[0] == 0);
}

TEST_CASE("threshold boundary is inclusive") {
  // |A∩B| = 4, |A∪B| = 8 -> IoU exactly 0.5.
  const BinaryMask pred = rect_mask(8, 8, 0, 0, 2, 2);
  const BinaryMask gt = rect_mask(8, 8, 0, 0, 4, 2);
  REQUIRE(mask_iou(pred, gt) == 0.5);
  const MatchResult at = match_detections({detection_from_mask(pred, 0.9)}, {gt}, 0.50);
  CHECK(at.pairs.size() == 1);

  // Best IoU 0.49 stays unmatched at 0.50.
  const BinaryMask pred49 = rect_mask(100, 100, 0, 0, 49, 1);
  const BinaryMask gt100 = rect_mask(100, 100, 0, 0, 100, 1);
  REQUIRE(mask_iou(pred49, gt100) == 0.49);
  const MatchResult below =
      match_detections({detection_from_mask(pred49, 0.9)}, {gt100}, 0.50);
  CHECK(below.pairs.empty());
  CHECK(below.unmatched_predictions.size() == 1);
  CHECK(below.unmatched_ground_truths.size() == 1);
}

TEST_CASE("average precision frozen examples, oracle confirmed") {
  // Perfect detector.
  CHECK(average_precision({{0.9, true}}, 1) == 1.0);
  CHECK(oracle::average_precision_bruteforce({{0.9, true}}, 1) == 1.0);

  // TP before FP: full recall reached at precision 1.
  CHECK(average_precision({{0.9, true}, {0.8, false}}, 1) == 1.0);
  CHECK(oracle::average_precision_bruteforce({{0.9, true}, {0.8, false}}, 1) == 1.0);

  // FP before TP: max precision at every recall level is 0.5. The oracle
  // fixes the golden value at 0.5 (not 51/101).
  const double from_oracle =
      oracle::average_precision_bruteforce({{0.9, false}, {0.8, true}}, 1);
  REQUIRE(from_oracle == 0.5);
  CHECK(average_precision({{0.9, false}, {0.8, true}}, 1) == from_oracle);
}

TEST_CASE("average precision edge cases") {
  CHECK(average_precision({{0.9, false}}, 0) == 0.0);
  CHECK(average_precision({}, 3) == 0.0);
  try {
    average_precision({}, 0);
    FAIL("expected NoGroundTruthNoPrediction");
  } catch (const error& e) {
    CHECK(e.code() == errc::no_ground_truth_no_prediction);
  }
}

TEST_CASE("average precision matches the oracle on random pools") {
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const int n = static_cast<int>(rng() % 12);
    const auto gts = static_cast<std::int64_t>(rng() % 6);
    std::vector<ScoredOutcome> pool;
    std::vector<oracle::Outcome> opool;
    std::int64_t tp_budget = gts;
    for (int i = 0; i < n; ++i) {
      const double score = static_cast<double>(rng() % 101) / 100.0;
      bool tp = tp_budget > 0 && rng() % 2 == 0;
      if (tp) --tp_budget;
      pool.push_back({score, tp});
      opool.push_back({score, tp});
    }
    if (gts == 0 && pool.empty()) continue;
    const double expected = oracle::average_precision_bruteforce(opool, gts);
    REQUIRE(average_precision(pool, gts) == Catch::Approx(expected).margin(1e-12));
  }
}

TEST_CASE("average precision depends only on score order") {
  const std::vector<ScoredOutcome> base = {
      {0.9, true}, {0.7, false}, {0.6, true}, {0.3, false}, {0.2, true}};
  const double ap = average_precision(base, 4);
  std::vector<ScoredOutcome> rescaled = base;
  for (auto& o : rescaled) o.score = 0.05 + 0.5 * o.score;  // monotone map
  CHECK(average_precision(rescaled, 4) == ap);
}

TEST_CASE("flipping a TP to FP never increases AP") {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng() % 8);
    const auto gts = static_cast<std::int64_t>(1 + rng() % 5);
    std::vector<ScoredOutcome> pool;
    for (int i = 0; i < n; ++i)
      pool.push_back({static_cast<double>(rng() % 101) / 100.0, rng() % 2 == 0});
    const double before = average_precision(pool, gts);
    std::vector<std::size_t> tps;
    for (std::size_t i = 0; i < pool.size(); ++i)
      if (pool[i].true_positive) tps.push_back(i);
    if (tps.empty()) continue;
    pool[tps[rng() % tps.size()]].true_positive = false;
    REQUIRE(average_precision(pool, gts) <= before + 1e-12);
  }
}

namespace {

GroundTruthSet synthetic_gt(int frames, int w, int h) {
  GroundTruthSet gt;
  gt.categories = {"lesion"};
  std::int64_t next_id = 1;
  for (int f = 0; f < frames; ++f) {
    GtFrame frame;
    frame.id = f;
    frame.width = w;
    frame.height = h;
    frame.file_name = "frame" + std::to_string(f) + ".png";
    GtAnnotation ann;
    ann.id = next_id++;
    ann.label = "lesion";
    const double x0 = 1.0 + f, y0 = 2.0, x1 = x0 + 5.0, y1 = 9.0;
    ann.polygons.push_back(Polygon{{{x0, y0}, {x1, y0}, {x1, y1}, {x0, y1}}});
    frame.annotations.push_back(ann);
    gt.frames.push_back(frame);
  }
  return gt;
}

}  // namespace

TEST_CASE("evaluate gives AP 1.0 when predictions equal ground truth") {
  const GroundTruthSet gt = synthetic_gt(3, 16, 16);
  std::map<std::int64_t, std::vector<Detection>> preds;
  for (const auto& frame : gt.frames) {
    const BinaryMask m =
        rasterize_annotation(frame.annotations[0], frame.width, frame.height);
    preds[frame.id].push_back(detection_from_mask(m, 0.9));
  }
  const EvalReport report = evaluate(preds, gt);
  REQUIRE(report.per_threshold_ap.size() == 10);
  for (const auto& [t, ap] : report.per_threshold_ap) {
    INFO("threshold " << t);
    REQUIRE(ap == Catch::Approx(1.0).margin(1e-12));
  }
  CHECK(report.map_50 == Catch::Approx(1.0).margin(1e-12));
  CHECK(report.map_50_95 == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("evaluate gives AP 0 without predictions") {
  const GroundTruthSet gt = synthetic_gt(2, 16, 16);
  const EvalReport report = evaluate({}, gt);
  for (const auto& [t, ap] : report.per_threshold_ap) {
    (void)t;
    REQUIRE(ap == 0.0);
  }
}

TEST_CASE("evaluate rejects unknown frames and mismatched masks") {
  const GroundTruthSet gt = synthetic_gt(2, 16, 16);
  std::map<std::int64_t, std::vector<Detection>> unknown;
  unknown[99].push_back(detection_from_mask(rect_mask(16, 16, 0, 0, 2, 2), 0.9));
  try {
    evaluate(unknown, gt);
    FAIL("expected UnknownFrame");
  } catch (const error& e) {
    CHECK(e.code() == errc::unknown_frame);
  }

  std::map<std::int64_t, std::vector<Detection>> wrong;
  wrong[0].push_back(detection_from_mask(rect_mask(8, 8, 0, 0, 2, 2), 0.9));
  try {
    evaluate(wrong, gt);
    FAIL("expected DimensionMismatch");
  } catch (const error& e) {
    CHECK(e.code() == errc::dimension_mismatch);
  }
}

TEST_CASE("AP is non-increasing in the IoU threshold") {
  std::mt19937_64 rng(77);
  const GroundTruthSet gt = synthetic_gt(3, 16, 16);
  std::map<std::int64_t, std::vector<Detection>> preds;
  for (const auto& frame : gt.frames) {
    const BinaryMask m = rect_mask(16, 16, 1 + static_cast<int>(frame.id), 1,
                                   7 + static_cast<int>(frame.id), 8);
    preds[frame.id].push_back(detection_from_mask(m, 0.6 + 0.1 * frame.id));
  }
  const EvalReport report = evaluate(preds, gt);
  for (std::size_t i = 1; i < report.per_threshold_ap.size(); ++i)
    REQUIRE(report.per_threshold_ap[i].second <=
            report.per_threshold_ap[i - 1].second + 1e-12);
}

TEST_CASE("evaluate matches the brute-force oracle on random instances") {
  std::mt19937_64 rng(123);
  const std::vector<double> thresholds = coco_iou_thresholds();
  for (int trial = 0; trial < 60; ++trial) {
    const int frames = 1 + static_cast<int>(rng() % 5);
    const int w = 10 + static_cast<int>(rng() % 7);
    const int h = 10 + static_cast<int>(rng() % 7);

    GroundTruthSet gt;
    gt.categories = {"lesion"};
    oracle::EvalInstance inst;
    std::map<std::int64_t, std::vector<Detection>> preds;
    std::int64_t next_ann = 1;
    std::int64_t total_gts = 0;

    for (int f = 0; f < frames; ++f) {
      GtFrame frame;
      frame.id = f;
      frame.width = w;
      frame.height = h;
      frame.file_name = "f.png";
      auto& fc = inst.frames[f];

      const int gts = static_cast<int>(rng() % 5);
      for (int g = 0; g < gts; ++g) {
        const int x0 = static_cast<int>(rng() % (w - 2));
        const int y0 = static_cast<int>(rng() % (h - 2));
        const int x1 = x0 + 1 + static_cast<int>(rng() % (w - x0 - 1));
        const int y1 = y0 + 1 + static_cast<int>(rng() % (h - y0 - 1));
        GtAnnotation ann;
        ann.id = next_ann++;
        ann.label = "lesion";
        ann.polygons.push_back(
            Polygon{{{static_cast<double>(x0), static_cast<double>(y0)},
                     {static_cast<double>(x1), static_cast<double>(y0)},
                     {static_cast<double>(x1), static_cast<double>(y1)},
                     {static_cast<double>(x0), static_cast<double>(y1)}}});
        frame.annotations.push_back(ann);
        fc.gt_masks.push_back(rect_mask(w, h, x0, y0, x1, y1));
        ++total_gts;
      }
      gt.frames.push_back(frame);

      const int nps = static_cast<int>(rng() % 5);
      for (int p = 0; p < nps; ++p) {
        const int x0 = static_cast<int>(rng() % (w - 2));
        const int y0 = static_cast<int>(rng() % (h - 2));
        const int x1 = x0 + 1 + static_cast<int>(rng() % (w - x0 - 1));
        const int y1 = y0 + 1 + static_cast<int>(rng() % (h - y0 - 1));
        const double score = static_cast<double>(rng() % 101) / 100.0;
        const BinaryMask m = rect_mask(w, h, x0, y0, x1, y1);
        preds[f].push_back(detection_from_mask(m, score));
        fc.pred_masks.push_back(m);
        fc.pred_scores.push_back(score);
      }
    }
    if (total_gts == 0) continue;

    const EvalReport report = evaluate(preds, gt, thresholds);
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
      const double expected = oracle::evaluate_bruteforce(inst, thresholds[i]);
      INFO("trial " << trial << " threshold " << thresholds[i]);
      REQUIRE(report.per_threshold_ap[i].second ==
              Catch::Approx(expected).margin(1e-9));
    }
  }
}

TEST_CASE("ground truth loader accepts a minimal file") {
  testutil::TempDir tmp("gt");
  const auto path = tmp.path() / "gt.json";
  std::ofstream(path) << R"({
    "frames": [{"id": 0, "width": 16, "height": 16, "file_name": "a.png"}],
    "annotations": [{"id": 1, "frame_id": 0, "label": "lesion",
                     "polygons": [[2, 2, 10, 2, 6, 9]]}],
    "categories": ["lesion"]
  })";
  const GroundTruthSet gt = load_ground_truth(path);
  REQUIRE(gt.frames.size() == 1);
  REQUIRE(gt.frames[0].annotations.size() == 1);
  CHECK(gt.frames[0].annotations[0].polygons.size() == 1);
  CHECK(gt.categories == std::vector<std::string>{"lesion"});
}

TEST_CASE("ground truth loader rejects bad files") {
  testutil::TempDir tmp("gt-bad");

  const auto missing_frame = tmp.path() / "missing_frame.json";
  std::ofstream(missing_frame) << R"({
    "frames": [{"id": 0, "width": 16, "height": 16, "file_name": "a.png"}],
    "annotations": [{"id": 1, "frame_id": 7, "label": "lesion",
                     "polygons": [[2, 2, 10, 2, 6, 9]]}],
    "categories": ["lesion"]
  })";
  try {
    load_ground_truth(missing_frame);
    FAIL("expected SchemaError");
  } catch (const error& e) {
    CHECK(e.code() == errc::schema_error);
  }

  const auto dup = tmp.path() / "dup.json";
  std::ofstream(dup) << R"({
    "frames": [{"id": 0, "width": 16, "height": 16, "file_name": "a.png"}],
    "annotations": [
      {"id": 1, "frame_id": 0, "label": "lesion", "polygons": [[2, 2, 10, 2, 6, 9]]},
      {"id": 1, "frame_id": 0, "label": "lesion", "polygons": [[1, 1, 5, 1, 3, 4]]}],
    "categories": ["lesion"]
  })";
  try {
    load_ground_truth(dup);
    FAIL("expected DuplicateId");
  } catch (const error& e) {
    CHECK(e.code() == errc::duplicate_id);
  }

  const auto unknown_key = tmp.path() / "unknown.json";
  std::ofstream(unknown_key) << R"({
    "frames": [], "annotations": [], "categories": [], "extra": 1
  })";
  try {
    load_ground_truth(unknown_key);
    FAIL("expected SchemaError");
  } catch (const error& e) {
    CHECK(e.code() == errc::schema_error);
  }

  const auto garbage = tmp.path() / "garbage.json";
  std::ofstream(garbage) << "{not json";
  try {
    load_ground_truth(garbage);
    FAIL("expected ParseError");
  } catch (const error& e) {
    CHECK(e.code() == errc::parse_error);
  }
}

TEST_CASE("multi-polygon annotations rasterize as a union") {
  GtAnnotation ann;
  ann.id = 1;
  ann.label = "lesion";
  ann.polygons.push_back(Polygon{{{0, 0}, {4, 0}, {4, 4}, {0, 4}}});
  ann.polygons.push_back(Polygon{{{8, 8}, {12, 8}, {12, 12}, {8, 12}}});
  const BinaryMask m = rasterize_annotation(ann, 16, 16);
  CHECK(m.foreground_count() == 32);
  CHECK(m.at(1, 1));
  CHECK(m.at(9, 9));
  CHECK_FALSE(m.at(6, 6));
}

TEST_CASE("ground truth writer round-trips through the loader") {
  const GroundTruthSet gt = synthetic_gt(3, 16, 16);
  testutil::TempDir tmp("gt-rt");
  const auto path = tmp.path() / "out.json";
  write_ground_truth(gt, path);
  const GroundTruthSet back = load_ground_truth(path);
  REQUIRE(back.frames.size() == gt.frames.size());
  for (std::size_t i = 0; i < gt.frames.size(); ++i) {
    REQUIRE(back.frames[i].id == gt.frames[i].id);
    REQUIRE(back.frames[i].annotations.size() == gt.frames[i].annotations.size());
    REQUIRE(back.frames[i].annotations[0].polygons ==
            gt.frames[i].annotations[0].polygons);
  }
  CHECK(back.categories == gt.categories);
}
