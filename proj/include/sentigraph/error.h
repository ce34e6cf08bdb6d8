// Copyright 2026 The Sentigraph Authors.
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

#ifndef SENTIGRAPH_ERROR_H_
#define SENTIGRAPH_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace sentigraph {

// Error codes shared by every module. The string form is what the CLI and
// the HTTP API report in their `code` fields.
enum class ErrorCode {
  kMalformedInput,
  kUnknownRole,
  kEmptyDialogue,
  kBadRatios,
  kEmptyText,
  kProviderFailure,
  kUnlabeledUtterance,
  kEmptyKnowledge,
  kEmptyContext,
  kLengthMismatch,
  kEncoderFailure,
  kNonFiniteInput,
  kDimMismatch,
  kEmptyMemory,
  kContextTooLong,
  kEmptyDataset,
  kNonFiniteLoss,
  kEmbedderFailure,
  kEmptyRun,
  kDuplicateVariant,
  kStoreFailure,
  kSessionNotFound,
  kEmptyMessage,
  kGenerationFailure,
  kInvalidRating,
  kServiceBusy,
  kBadCheckpoint,
  kBadConfig,
};

std::string_view ErrorCodeName(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string &message)
      : std::runtime_error(std::string(ErrorCodeName(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const { return code_; }
  const std::string &detail() const { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace sentigraph

#endif  // SENTIGRAPH_ERROR_H_
