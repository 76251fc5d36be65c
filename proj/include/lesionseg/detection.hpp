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
#include <optional>
#include <string>
#include <vector>

#include "lesionseg/mask.hpp"

namespace lesionseg {

/// One segmented region: tight bounding box, mask at frame resolution,
/// confidence score in [0, 1] and class label. `id` is reserved for temporal
/// association; nothing in this library assigns it.
struct Detection {
  BBox bbox;
  RleMask mask;
  double score = 0.0;
  std::string label;
  std::optional<std::int64_t> id;

  friend bool operator==(const Detection&, const Detection&) = default;
};

/// All detections of one frame. The list may be empty.
struct FrameDetections {
  std::int64_t frame_index = 0;
  std::vector<Detection> detections;

  friend bool operator==(const FrameDetections&, const FrameDetections&) = default;
};

}  // namespace lesionseg
