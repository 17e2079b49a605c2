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

#include "trojanloc/error.h"

namespace trojanloc {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kMalformedRecord: return "MalformedRecord";
    case ErrorCode::kLabelLengthMismatch: return "LabelLengthMismatch";
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
    case ErrorCode::kAnchorNotFound: return "AnchorNotFound";
    case ErrorCode::kEmptyRange: return "EmptyRange";
    case ErrorCode::kBackendFailure: return "BackendFailure";
    case ErrorCode::kConnectFailed: return "ConnectFailed";
    case ErrorCode::kMalformedResponse: return "MalformedResponse";
    case ErrorCode::kServerError: return "ServerError";
    case ErrorCode::kTimeout: return "Timeout";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kVersionUnsupported: return "VersionUnsupported";
    case ErrorCode::kTruncatedFile: return "TruncatedFile";
    case ErrorCode::kDimensionError: return "DimensionError";
    case ErrorCode::kEmptyData: return "EmptyData";
    case ErrorCode::kSingleClass: return "SingleClass";
    case ErrorCode::kMissingClass: return "MissingClass";
    case ErrorCode::kFeatureWidthMismatch: return "FeatureWidthMismatch";
    case ErrorCode::kInvalidWindow: return "InvalidWindow";
    case ErrorCode::kMissingEmbedding: return "MissingEmbedding";
    case ErrorCode::kConfigMismatch: return "ConfigMismatch";
    case ErrorCode::kMissingArtifact: return "MissingArtifact";
    case ErrorCode::kConfigInvalid: return "ConfigInvalid";
  }
  return "Unknown";
}

Error::Error(ErrorCode code, const std::string& message,
             std::optional<int64_t> detail)
    : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
      code_(code),
      detail_(detail) {}

}  // namespace trojanloc
