// SPDX-FileCopyrightText: 2026 evpcc contributors
// SPDX-License-Identifier: Apache-2.0

#ifndef EVPCC_ERROR_HPP
#define EVPCC_ERROR_HPP

#include <stdexcept>
#include <string>

namespace evpcc {

enum class ErrorCode {
  kFieldOverflow,
  kTruncatedStream,
  kIo,
  kParse,
  kEmptyInput,
  kTooFewPoints,
  kUndefinedMetric,
  kMissingScores,
  kNoCandidates,
  kCoordinateOverflow,
  kCorruptPayload,
  kExternalCommand,
  kInsufficientPoints,
  kNoOverlap,
  kInvalidArgument,
};

const char* to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so that
/// callers (the CLI, the pipeline failure manifest) can classify it.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace evpcc

#endif  // EVPCC_ERROR_HPP
