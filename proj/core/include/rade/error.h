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

#ifndef RADE_ERROR_H_
#define RADE_ERROR_H_

#include <stdexcept>
#include <string>
#include <string_view>

namespace rade {

// Machine-readable error codes. The string form (ErrorCodeName) is what the
// annotation service puts on the wire and what the CLI prints.
enum class ErrorCode {
  kUsage,
  kIo,
  kMissingFile,
  kMalformedRecord,
  kDuplicateId,
  kInvalidArgument,
  kKeyMismatch,
  kNoAnnotations,
  kUndefinedCorrelation,
  kRaggedRatings,
  kDegenerateAgreement,
  kInsufficientAnnotators,
  kIdMismatch,
  kEmptyCorpus,
  kEmptyIndex,
  kInvalidDocument,
  kSequenceTooLong,
  kFullyMasked,
  kNonFinite,
  kCorruptCheckpoint,
  kCheckpointMismatch,
  kMissingScore,
  kNoRemainingItems,
  kExhausted,
  kStaleItem,
  kSessionClosed,
  kUnknownSession,
  kUnknownDataset,
  kOrderingViolation,
  kInsufficientOverlap,
  kUnauthorized,
};

std::string_view ErrorCodeName(ErrorCode code);

// Process exit code for a given error: 1 usage, 2 data, 3 numerical.
int ExitCodeFor(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace rade

#endif  // RADE_ERROR_H_
