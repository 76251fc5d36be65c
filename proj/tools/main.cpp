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

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "lesionseg/lesionseg.hpp"

namespace fs = std::filesystem;
using namespace lesionseg;

namespace {

int run_validate(const std::string& meta_path) {
  const RunMetadata meta = parse_metadata(meta_path);
  validate_metadata_consistency(meta);
  std::printf("ok: %s (%lld frames, schema %d)\n", meta_path.c_str(),
              static_cast<long long>(meta.video.frame_count), meta.schema_version);
  return 0;
}

int run_split(const std::string& gt_path, std::uint64_t seed,
              const std::vector<double>& fractions, const std::string& out_dir) {
  if (fractions.size() != 3)
    raise(errc::bad_fractions, "--fractions needs train,val,test");
  const GroundTruthSet gt = load_ground_truth(gt_path);
  const auto parts =
      split_dataset(gt, seed, {fractions[0], fractions[1], fractions[2]});
  fs::create_directories(out_dir);
  const std::string stem = fs::path(gt_path).stem().string();
  const char* names[3] = {"train", "val", "test"};
  for (int i = 0; i < 3; ++i) {
    const fs::path out = fs::path(out_dir) / (stem + "." + names[i] + ".json");
    write_ground_truth(parts[static_cast<std::size_t>(i)], out);
    std::printf("%s: %zu frames -> %s\n", names[i],
                parts[static_cast<std::size_t>(i)].frames.size(),
                out.string().c_str());
  }
  return 0;
}

int run_eval(const std::string& gt_path, const std::string& meta_path) {
  const GroundTruthSet gt = load_ground_truth(gt_path);
  const RunMetadata meta = parse_metadata(meta_path);
  std::map<std::int64_t, std::vector<Detection>> preds;
  for (const auto& fd : meta.frames)
    if (!fd.detections.empty()) preds[fd.frame_index] = fd.detections;
  const EvalReport report = evaluate(preds, gt);
  for (const auto& [t, ap] : report.per_threshold_ap)
    std::printf("AP@%.2f=%.4f\n", t, ap);
  std::printf("mAP@0.50IoU=%.4f\n", report.map_50);
  std::printf("mAP@[0.50:0.95]=%.4f\n", report.map_50_95);
  return 0;
}

struct AugmentOp {
  std::string name;
  std::vector<double> params;
};

AugmentOp parse_augment_op(const std::string& text) {
  const std::size_t eq = text.find('=');
  AugmentOp op;
  op.name = text.substr(0, eq);
  if (eq != std::string::npos) {
    std::string rest = text.substr(eq + 1);
    std::size_t pos = 0;
    while (pos < rest.size()) {
      std::size_t comma = rest.find(',', pos);
      if (comma == std::string::npos) comma = rest.size();
      try {
        op.params.push_back(std::stod(rest.substr(pos, comma - pos)));
      } catch (const std::exception&) {
        raise(errc::config_error, "bad op parameter in '" + text + "'");
      }
      pos = comma + 1;
    }
  }
  return op;
}

BinaryMask mask_from_png(const fs::path& path) {
  const ImageRgb img = read_png(path);
  BinaryMask m = BinaryMask::zeros(img.width, img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x) {
      const std::uint8_t* p = img.at(x, y);
      if (p[0] || p[1] || p[2]) m.set(x, y, true);
    }
  return m;
}

void mask_to_png(const BinaryMask& m, const fs::path& path) {
  ImageRgb img = ImageRgb::black(m.width, m.height);
  for (int y = 0; y < m.height; ++y)
    for (int x = 0; x < m.width; ++x)
      if (m.at(x, y)) {
        std::uint8_t* p = img.at(x, y);
        p[0] = p[1] = p[2] = 255;
      }
  write_png(path, img);
}

int run_augment(const std::string& image_path,
                const std::vector<std::string>& mask_paths,
                const std::vector<std::string>& op_texts,
                const std::string& out_dir) {
  AnnotatedImage sample;
  sample.image = read_png(image_path);
  for (const auto& mp : mask_paths) {
    sample.masks.push_back(mask_from_png(mp));
    sample.labels.push_back(fs::path(mp).stem().string());
  }

  nlohmann::ordered_json manifest;
  manifest["source"]["image"] = image_path;
  manifest["source"]["masks"] = mask_paths;
  manifest["ops"] = nlohmann::ordered_json::array();

  for (const auto& text : op_texts) {
    const AugmentOp op = parse_augment_op(text);
    nlohmann::ordered_json jop;
    jop["op"] = op.name;
    if (op.name == "rotate" && op.params.size() == 1) {
      jop["angle_deg"] = op.params[0];
      sample = rotate_pair(sample, op.params[0]);
    } else if (op.name == "blur" && op.params.size() == 1) {
      jop["sigma"] = op.params[0];
      sample = blur_image(sample, op.params[0]);
    } else if (op.name == "desaturate" && op.params.size() == 1) {
      jop["amount"] = op.params[0];
      sample = desaturate_image(sample, op.params[0]);
    } else if (op.name == "crop" && op.params.size() == 4) {
      const BBox region{static_cast<int>(op.params[0]), static_cast<int>(op.params[1]),
                        static_cast<int>(op.params[2]), static_cast<int>(op.params[3])};
      jop["region"] = {region.x, region.y, region.w, region.h};
      sample = crop_pair(sample, region);
    } else if (op.name == "perspective" && op.params.size() == 8) {
      const std::array<Point, 4> quad = {
          Point{op.params[0], op.params[1]}, Point{op.params[2], op.params[3]},
          Point{op.params[4], op.params[5]}, Point{op.params[6], op.params[7]}};
      jop["quad"] = op.params;
      sample = perspective_pair(sample, quad);
    } else {
      raise(errc::config_error, "unknown or malformed op '" + text + "'");
    }
    manifest["ops"].push_back(std::move(jop));
  }

  fs::create_directories(out_dir);
  const fs::path image_out = fs::path(out_dir) / "image.png";
  write_png(image_out, sample.image);
  manifest["outputs"]["image"] = image_out.string();
  manifest["outputs"]["masks"] = nlohmann::ordered_json::array();
  for (std::size_t k = 0; k < sample.masks.size(); ++k) {
    char name[32];
    std::snprintf(name, sizeof(name), "mask_%02zu.png", k);
    const fs::path mask_out = fs::path(out_dir) / name;
    mask_to_png(sample.masks[k], mask_out);
    manifest["outputs"]["masks"].push_back(mask_out.string());
  }
  manifest["outputs"]["labels"] = sample.labels;

  std::ofstream mf(fs::path(out_dir) / "manifest.json");
  mf << manifest.dump(2) << "\n";
  std::printf("wrote %s\n", (fs::path(out_dir) / "manifest.json").string().c_str());
  return 0;
}

int run_estimate(const RunConfig& cfg, double profile_ms) {
  double total_s = 0.0;
  const auto profiles = builtin_runtime_profiles();
  const std::size_t model_count = std::max<std::size_t>(1, cfg.models.size());
  for (const auto& input : cfg.inputs) {
    const VideoInfo info =
        probe_frame_source(input, cfg.io_mode, cfg.transcoder);
    RuntimeProfile profile{info.width, info.height, profile_ms};
    for (const auto& p : profiles)
      if (p.width == info.width && p.height == info.height) profile = p;
    const double duration_s =
        info.frame_count > 0 ? static_cast<double>(info.frame_count) / info.fps : 0.0;
    total_s +=
        estimate_runtime(profile, info.fps, duration_s) * static_cast<double>(model_count);
  }
  std::printf("estimated_total_seconds=%lld\n",
              static_cast<long long>(std::llround(total_s)));
  return 0;
}

int run_process(const RunConfig& cfg) {
  const BatchSummary summary = run_batch(cfg);
  for (const auto& o : summary.outcomes) {
    if (o.ok) {
      std::printf("ok: %s x %s -> %s\n", o.input.string().c_str(),
                  o.model.c_str(), o.annotated_path.string().c_str());
    } else {
      std::fprintf(stderr, "failed: %s x %s: %s\n", o.input.string().c_str(),
                   o.model.c_str(), o.message.c_str());
    }
  }
  return summary.all_ok() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "lesionseg: annotates surgical videos with instance-segmentation "
      "overlays, a confidence timeline and machine-readable metadata"};
  app.require_subcommand(0, 1);

  std::vector<std::string> inputs, models;
  std::string output_dir;
  double threshold = 0.50;
  std::string io_mode = "video";
  bool no_metadata = false, estimate = false, stable_timing = false;
  bool no_boxes = false, no_labels = false;
  double alpha = 0.45, profile_ms = 170.0;
  int label_scale = 1, timeline_height = 0, workers = 1;
  TranscoderTemplates transcoder;

  app.add_option("-i,--input", inputs, "Input video file or frame directory (repeatable)");
  app.add_option("-m,--model", models,
                 "Model spec: mock:SEED, replay:META_JSON or external:CMD (repeatable)");
  app.add_option("-o,--output", output_dir, "Output folder");
  app.add_option("--threshold", threshold, "Confidence threshold (inclusive)")
      ->check(CLI::Range(0.0, 1.0));
  app.add_option("--io-mode", io_mode, "video or frame_directory")
      ->check(CLI::IsMember({"video", "frame_directory"}));
  app.add_flag("--no-metadata", no_metadata, "Skip the .meta.json output");
  app.add_flag("--estimate", estimate,
               "Print the runtime estimate instead of processing");
  app.add_option("--profile-ms", profile_ms,
                 "Per-frame milliseconds for --estimate when the resolution "
                 "has no built-in profile");
  app.add_option("--alpha", alpha, "Overlay opacity")->check(CLI::Range(0.0, 1.0));
  app.add_flag("--no-boxes", no_boxes, "Skip bounding-box outlines");
  app.add_flag("--no-labels", no_labels, "Skip label text");
  app.add_option("--label-scale", label_scale, "Integer scale of the label font");
  app.add_option("--timeline-height", timeline_height,
                 "Bar height in pixels (default: max(8, frame_height/60))");
  app.add_option("--workers", workers, "Concurrent analysis workers");
  app.add_flag("--stable-timing", stable_timing,
               "Zero the timing block so identical runs emit identical bytes");
  app.add_option("--probe-cmd", transcoder.probe, "Probe command template");
  app.add_option("--decode-cmd", transcoder.decode, "Decoder command template");
  app.add_option("--encode-cmd", transcoder.encode, "Encoder command template");

  auto* validate_cmd = app.add_subcommand("validate", "Check a metadata file");
  std::string validate_path;
  validate_cmd->add_option("meta", validate_path, "Metadata JSON path")->required();

  auto* split_cmd =
      app.add_subcommand("split", "Split an annotation file into train/val/test");
  std::string split_gt, split_out = ".";
  std::uint64_t split_seed = 0;
  std::vector<double> split_fractions = {0.8, 0.1, 0.1};
  split_cmd->add_option("--gt", split_gt, "Annotation JSON path")->required();
  split_cmd->add_option("--seed", split_seed, "Shuffle seed");
  split_cmd->add_option("--fractions", split_fractions, "train val test")
      ->expected(3);
  split_cmd->add_option("--out-dir", split_out, "Output directory");

  auto* eval_cmd = app.add_subcommand(
      "eval", "Evaluate recorded detections against annotations");
  std::string eval_gt, eval_meta;
  eval_cmd->add_option("--gt", eval_gt, "Annotation JSON path")->required();
  eval_cmd->add_option("--meta", eval_meta, "Run metadata path")->required();

  auto* augment_cmd =
      app.add_subcommand("augment", "Apply paired image+mask transforms");
  std::string aug_image, aug_out;
  std::vector<std::string> aug_masks, aug_ops;
  augment_cmd->add_option("--image", aug_image, "Input image (PNG)")->required();
  augment_cmd->add_option("--mask", aug_masks, "Mask PNG (repeatable)");
  augment_cmd->add_option("--op", aug_ops,
                          "rotate=DEG | blur=SIGMA | desaturate=AMT | "
                          "crop=X,Y,W,H | perspective=8 coords (repeatable)");
  augment_cmd->add_option("--out-dir", aug_out, "Output directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_name() == "CallForHelp" || e.get_name() == "CallForAllHelp")
      return app.exit(e);
    app.exit(e);
    return 2;
  }

  try {
    if (*validate_cmd) return run_validate(validate_path);
    if (*split_cmd) return run_split(split_gt, split_seed, split_fractions, split_out);
    if (*eval_cmd) return run_eval(eval_gt, eval_meta);
    if (*augment_cmd) return run_augment(aug_image, aug_masks, aug_ops, aug_out);

    RunConfig cfg;
    for (const auto& i : inputs) cfg.inputs.emplace_back(i);
    cfg.models = models;
    cfg.output_dir = output_dir;
    cfg.segmenter.confidence_threshold = threshold;
    cfg.overlay.alpha = alpha;
    cfg.overlay.draw_boxes = !no_boxes;
    cfg.overlay.draw_labels = !no_labels;
    cfg.overlay.label_scale = label_scale;
    cfg.timeline_height = timeline_height;
    cfg.emit_metadata = !no_metadata;
    cfg.io_mode = parse_io_mode(io_mode);
    cfg.workers = workers;
    cfg.stable_timing = stable_timing;
    cfg.transcoder = transcoder;

    if (estimate) {
      if (cfg.inputs.empty()) raise(errc::config_error, "no inputs given");
      return run_estimate(cfg, profile_ms);
    }
    return run_process(cfg);
  } catch (const error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return e.code() == errc::config_error ? 2 : 1;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
}
