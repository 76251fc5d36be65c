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

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "lesionseg/error.hpp"
#include "lesionseg/segmenter.hpp"
#include "lesionseg/subprocess.hpp"

namespace lesionseg {

/// Segmentation backend delegating to an external model runner process.
///
/// The runner is any executable speaking this per-frame protocol on
/// stdin/stdout:
///   in:  one JSON line {"frame_index": i, "width": w, "height": h}
///        followed by w*h*3 raw RGB24 bytes of the preprocessed frame
///   out: one JSON line {"detections": [{"score": s, "label": "...",
///        "mask_rle": {"size": [h, w], "counts": [...]}}]}
/// with masks in the preprocessed coordinate space. The runner exits when
/// its stdin closes. How the runner loads and executes the model artifact is
/// its own business.
class ExternalBackend : public SegmenterBackend {
 public:
  explicit ExternalBackend(std::string command)
      : command_(std::move(command)),
        process_(std::make_unique<DuplexProcess>(command_)) {}

  std::vector<RawDetection> run(const ImageRgb& preprocessed,
                                std::int64_t frame_index) override {
    nlohmann::ordered_json header;
    header["frame_index"] = frame_index;
    header["width"] = preprocessed.width;
    header["height"] = preprocessed.height;
    const std::string header_line = header.dump() + "\n";
    if (!process_->write_all(header_line.data(), header_line.size()) ||
        !process_->write_all(preprocessed.pixels.data(), preprocessed.pixels.size()))
      raise(errc::backend_failure, "runner pipe closed: " + command_);

    std::string line;
    if (!process_->read_line(line))
      raise(errc::backend_failure, "runner produced no response: " + command_);

    nlohmann::json reply;
    try {
      reply = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      raise(errc::backend_failure, std::string("bad runner response: ") + e.what());
    }
    std::vector<RawDetection> dets;
    try {
      for (const auto& jd : reply.at("detections")) {
        RawDetection det;
        det.score = jd.at("score").get<double>();
        det.label = jd.at("label").get<std::string>();
        RleMask rle;
        rle.height = jd.at("mask_rle").at("size")[0].get<int>();
        rle.width = jd.at("mask_rle").at("size")[1].get<int>();
        for (const auto& c : jd.at("mask_rle").at("counts"))
          rle.runs.push_back(c.get<std::int64_t>());
        det.mask = rle_decode(rle);
        dets.push_back(std::move(det));
      }
    } catch (const nlohmann::json::exception& e) {
      raise(errc::backend_failure, std::string("bad runner response: ") + e.what());
    }
    return dets;
  }

  bool concurrent_safe() const override { return false; }  // one pipe pair
  std::string name() const override { return "external"; }

 private:
  std::string command_;
  std::unique_ptr<DuplexProcess> process_;
};

}  // namespace lesionseg
