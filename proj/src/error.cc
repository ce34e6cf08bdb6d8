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

#include "sentigraph/error.h"

namespace sentigraph {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformedInput: return "MALFORMED_INPUT";
    case ErrorCode::kUnknownRole: return "UNKNOWN_ROLE";
    case ErrorCode::kEmptyDialogue: return "EMPTY_DIALOGUE";
    case ErrorCode::kBadRatios: return "BAD_RATIOS";
    case ErrorCode::kEmptyText: return "EMPTY_TEXT";
    case ErrorCode::kProviderFailure: return "PROVIDER_FAILURE";
    case ErrorCode::kUnlabeledUtterance: return "UNLABELED_UTTERANCE";
    case ErrorCode::kEmptyKnowledge: return "EMPTY_KNOWLEDGE";
    case ErrorCode::kEmptyContext: return "EMPTY_CONTEXT";
    case ErrorCode::kLengthMismatch: return "LENGTH_MISMATCH";
    case ErrorCode::kEncoderFailure: return "ENCODER_FAILURE";
    case ErrorCode::kNonFiniteInput: return "NON_FINITE_INPUT";
    case ErrorCode::kDimMismatch: return "DIM_MISMATCH";
    case ErrorCode::kEmptyMemory: return "EMPTY_MEMORY";
    case ErrorCode::kContextTooLong: return "CONTEXT_TOO_LONG";
    case ErrorCode::kEmptyDataset: return "EMPTY_DATASET";
    case ErrorCode::kNonFiniteLoss: return "NON_FINITE_LOSS";
    case ErrorCode::kEmbedderFailure: return "EMBEDDER_FAILURE";
    case ErrorCode::kEmptyRun: return "EMPTY_RUN";
    case ErrorCode::kDuplicateVariant: return "DUPLICATE_VARIANT";
    case ErrorCode::kStoreFailure: return "STORE_FAILURE";
    case ErrorCode::kSessionNotFound: return "SESSION_NOT_FOUND";
    case ErrorCode::kEmptyMessage: return "EMPTY_MESSAGE";
    case ErrorCode::kGenerationFailure: return "GENERATION_FAILURE";
    case ErrorCode::kInvalidRating: return "INVALID_RATING";
    case ErrorCode::kServiceBusy: return "SERVICE_BUSY";
    case ErrorCode::kBadCheckpoint: return "BAD_CHECKPOINT";
    case ErrorCode::kBadConfig: return "BAD_CONFIG";
  }
  return "UNKNOWN";
}

}  // namespace sentigraph
