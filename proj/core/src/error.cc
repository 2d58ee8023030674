// Copyright 2026 The RADE Toolkit Authors.
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

#include "rade/error.h"

namespace rade {

std::string_view ErrorCodeName(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUsage: return "usage";
    case ErrorCode::kIo: return "io_error";
    case ErrorCode::kMissingFile: return "missing_file";
    case ErrorCode::kMalformedRecord: return "malformed_record";
    case ErrorCode::kDuplicateId: return "duplicate_id";
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kKeyMismatch: return "key_mismatch";
    case ErrorCode::kNoAnnotations: return "no_annotations";
    case ErrorCode::kUndefinedCorrelation: return "undefined_correlation";
    case ErrorCode::kRaggedRatings: return "ragged_ratings";
    case ErrorCode::kDegenerateAgreement: return "degenerate_agreement";
    case ErrorCode::kInsufficientAnnotators: return "insufficient_annotators";
    case ErrorCode::kIdMismatch: return "id_mismatch";
    case ErrorCode::kEmptyCorpus: return "empty_corpus";
    case ErrorCode::kEmptyIndex: return "empty_index";
    case ErrorCode::kInvalidDocument: return "invalid_document";
    case ErrorCode::kSequenceTooLong: return "sequence_too_long";
    case ErrorCode::kFullyMasked: return "fully_masked";
    case ErrorCode::kNonFinite: return "non_finite";
    case ErrorCode::kCorruptCheckpoint: return "corrupt_checkpoint";
    case ErrorCode::kCheckpointMismatch: return "checkpoint_mismatch";
    case ErrorCode::kMissingScore: return "missing_score";
    case ErrorCode::kNoRemainingItems: return "no_remaining_items";
    case ErrorCode::kExhausted: return "exhausted";
    case ErrorCode::kStaleItem: return "stale_item";
    case ErrorCode::kSessionClosed: return "session_closed";
    case ErrorCode::kUnknownSession: return "unknown_session";
    case ErrorCode::kUnknownDataset: return "unknown_dataset";
    case ErrorCode::kOrderingViolation: return "ordering_violation";
    case ErrorCode::kInsufficientOverlap: return "insufficient_overlap";
    case ErrorCode::kUnauthorized: return "unauthorized";
  }
  return "unknown";
}

int ExitCodeFor(ErrorCode code) {
  switch (code) {
    case ErrorCode::kUsage:
    case ErrorCode::kInvalidArgument:
      return 1;
    case ErrorCode::kNonFinite:
    case ErrorCode::kUndefinedCorrelation:
    case ErrorCode::kDegenerateAgreement:
      return 3;
    default:
      return 2;
  }
}

}  // namespace rade
