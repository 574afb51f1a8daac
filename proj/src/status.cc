// Copyright 2026 The rvqkit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rvqkit/status.h"

namespace rvqkit {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument:
      return "invalid_argument";
    case ErrorCode::kNotFound:
      return "not_found";
    case ErrorCode::kUnsupported:
      return "unsupported";
    case ErrorCode::kTruncated:
      return "truncated";
    case ErrorCode::kBadMagic:
      return "bad_magic";
    case ErrorCode::kUnsupportedVersion:
      return "unsupported_version";
    case ErrorCode::kIoError:
      return "io_error";
    case ErrorCode::kOutOfRange:
      return "out_of_range";
    case ErrorCode::kRateMismatch:
      return "rate_mismatch";
    case ErrorCode::kLengthMismatch:
      return "length_mismatch";
    case ErrorCode::kTooShort:
      return "too_short";
    case ErrorCode::kDegenerateInput:
      return "degenerate_input";
    case ErrorCode::kDataError:
      return "data_error";
  }
  return "unknown";
}

}  // namespace rvqkit
