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

#include <stdexcept>
#include <string>

namespace lesionseg {

/// Failure categories raised across the library. Every throwing operation
/// documents which of these it can raise.
enum class errc {
  // mask / polygon
  sum_mismatch,
  interior_zero,
  degenerate_polygon,
  empty_mask,
  // frame input/output
  not_found,
  decode_failure,
  encode_failure,
  inconsistent_dimensions,
  out_of_order_frame,
  // segmenter
  backend_failure,
  dimension_mismatch,
  schema_version_unsupported,
  // render
  index_out_of_range,
  out_of_range,
  bad_geometry,
  // eval
  no_ground_truth_no_prediction,
  unknown_frame,
  parse_error,
  schema_error,
  duplicate_id,
  // augment
  out_of_bounds,
  degenerate_quad,
  // orchestration
  bad_fractions,
  config_error,
};

inline const char* to_string(errc c) {
  switch (c) {
    case errc::sum_mismatch: return "SumMismatch";
    case errc::interior_zero: return "InteriorZero";
    case errc::degenerate_polygon: return "DegeneratePolygon";
    case errc::empty_mask: return "EmptyMask";
    case errc::not_found: return "NotFound";
    case errc::decode_failure: return "DecodeFailure";
    case errc::encode_failure: return "EncodeFailure";
    case errc::inconsistent_dimensions: return "InconsistentDimensions";
    case errc::out_of_order_frame: return "OutOfOrderFrame";
    case errc::backend_failure: return "BackendFailure";
    case errc::dimension_mismatch: return "DimensionMismatch";
    case errc::schema_version_unsupported: return "SchemaVersionUnsupported";
    case errc::index_out_of_range: return "IndexOutOfRange";
    case errc::out_of_range: return "OutOfRange";
    case errc::bad_geometry: return "BadGeometry";
    case errc::no_ground_truth_no_prediction: return "NoGroundTruthNoPrediction";
    case errc::unknown_frame: return "UnknownFrame";
    case errc::parse_error: return "ParseError";
    case errc::schema_error: return "SchemaError";
    case errc::duplicate_id: return "DuplicateId";
    case errc::out_of_bounds: return "OutOfBounds";
    case errc::degenerate_quad: return "DegenerateQuad";
    case errc::bad_fractions: return "BadFractions";
    case errc::config_error: return "ConfigError";
  }
  return "UnknownError";
}

class error : public std::runtime_error {
 public:
  error(errc code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  errc code() const noexcept { return code_; }

 private:
  errc code_;
};

[[noreturn]] inline void raise(errc code, const std::string& message) {
  throw error(code, message);
}

}  // namespace lesionseg
