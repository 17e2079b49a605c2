// Copyright 2026 The TrojanLoC Authors.
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

#ifndef TROJANLOC_ERROR_H_
#define TROJANLOC_ERROR_H_

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace trojanloc {

enum class ErrorCode {
  kInvalidArgument,
  kIoError,
  // rtl-corpus
  kMalformedRecord,
  kLabelLengthMismatch,
  kEmptyCorpus,
  // fixtures
  kAnchorNotFound,
  // embedding
  kEmptyRange,
  kBackendFailure,
  kConnectFailed,
  kMalformedResponse,
  kServerError,
  kTimeout,
  kLengthMismatch,
  // binary artifacts
  kBadMagic,
  kVersionUnsupported,
  kTruncatedFile,
  // learning
  kDimensionError,
  kEmptyData,
  kSingleClass,
  kMissingClass,
  kFeatureWidthMismatch,
  // pipeline / cli
  kInvalidWindow,
  kMissingEmbedding,
  kConfigMismatch,
  kMissingArtifact,
  kConfigInvalid,
};

std::string_view ErrorCodeName(ErrorCode code);

// Every failure in the library surfaces as an Error. `detail` carries the
// numeric payload some errors have (line number, entry index, HTTP status,
// class index).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<int64_t> detail = std::nullopt);

  ErrorCode code() const { return code_; }
  std::optional<int64_t> detail() const { return detail_; }

 private:
  ErrorCode code_;
  std::optional<int64_t> detail_;
};

}  // namespace trojanloc

#endif  // TROJANLOC_ERROR_H_
