#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace mergelens {

enum class ErrorCode {
  kInvalidArgument,
  kInvalidConfig,
  kIo,
  // ingest
  kMissingColumn,
  kNonMonotonicFrames,
  kEmptyInput,
  // kinematics
  kOutOfRange,
  kDegenerateSpeed,
  kInsufficientHistory,
  // events
  kNoCandidate,
  kNeverCrosses,
  // metrics
  kMixedTau,
  kMisalignedEdges,
  kMisalignedSampling,
  // predictors
  kTooLittleHistory,
  kProtocolViolation,
  kTimeout,
  kChildExited,
  kPredictorError,
  // synth
  kInfeasibleScript,
};

std::string_view to_string(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        detail_(message) {}

  ErrorCode code() const noexcept { return code_; }
  /// Message without the error-code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace mergelens
