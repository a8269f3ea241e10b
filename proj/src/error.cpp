// Copyright 2026 The proact Authors. All Rights Reserved.
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

#include "proact/error.hpp"

namespace proact {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidConfig: return "invalid-config";
    case ErrorCode::kShape: return "shape";
    case ErrorCode::kPositionOrder: return "position-order";
    case ErrorCode::kSealedSegment: return "sealed-segment";
    case ErrorCode::kOverflow: return "overflow";
    case ErrorCode::kMissingFlag: return "missing-flag";
    case ErrorCode::kInvalidTarget: return "invalid-target";
    case ErrorCode::kOutOfRange: return "out-of-range";
    case ErrorCode::kUndefinedMetric: return "undefined-metric";
    case ErrorCode::kInvalidScore: return "invalid-score";
    case ErrorCode::kNumeric: return "numeric";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kParse: return "parse";
  }
  return "unknown";
}

}  // namespace proact
