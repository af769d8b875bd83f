// Copyright 2026 The bctlab Authors
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

#include "bctlab/error.hpp"

namespace bctlab {

const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kInvalidSplit: return "invalid-split";
    case ErrorCode::kInvalidProtocol: return "invalid-protocol";
    case ErrorCode::kCorruptFile: return "corrupt-file";
    case ErrorCode::kNumericFault: return "numeric-fault";
    case ErrorCode::kDegenerateInput: return "degenerate-input";
    case ErrorCode::kDegenerateTemplate: return "degenerate-template";
    case ErrorCode::kIo: return "io-error";
    case ErrorCode::kConfig: return "config-error";
  }
  return "unknown";
}

}  // namespace bctlab
