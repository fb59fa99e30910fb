// Copyright 2026 The p2p Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
#include "p2p/common/error.hpp"

namespace p2p {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kDegenerateRing: return "degenerate ring";
    case ErrorCode::kInsufficientPrimitives: return "insufficient primitives";
    case ErrorCode::kDegenerateBox: return "degenerate box";
    case ErrorCode::kShape: return "shape error";
    case ErrorCode::kGenerationFailure: return "generation failure";
    case ErrorCode::kParse: return "parse error";
    case ErrorCode::kIngestion: return "ingestion error";
    case ErrorCode::kTargetConstruction: return "target construction error";
    case ErrorCode::kNumeric: return "numeric error";
    case ErrorCode::kLabel: return "label error";
    case ErrorCode::kInput: return "input error";
    case ErrorCode::kIo: return "I/O error";
    case ErrorCode::kResume: return "resume error";
    case ErrorCode::kCheckpoint: return "checkpoint error";
  }
  return "error";
}

}  // namespace p2p
