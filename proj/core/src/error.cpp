#include "mergelens/error.hpp"

namespace mergelens {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kIo: return "Io";
    case ErrorCode::kMissingColumn: return "MissingColumn";
    case ErrorCode::kNonMonotonicFrames: return "NonMonotonicFrames";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kOutOfRange: return "OutOfRange";
    case ErrorCode::kDegenerateSpeed: return "DegenerateSpeed";
    case ErrorCode::kInsufficientHistory: return "InsufficientHistory";
    case ErrorCode::kNoCandidate: return "NoCandidate";
    case ErrorCode::kNeverCrosses: return "NeverCrosses";
    case ErrorCode::kMixedTau: return "MixedTau";
    case ErrorCode::kMisalignedEdges: return "MisalignedEdges";
    case ErrorCode::kMisalignedSampling: return "MisalignedSampling";
    case ErrorCode::kTooLittleHistory: return "TooLittleHistory";
    case ErrorCode::kProtocolViolation: return "ProtocolViolation";
    case ErrorCode::kTimeout: return "Timeout";
    case ErrorCode::kChildExited: return "ChildExited";
    case ErrorCode::kPredictorError: return "PredictorError";
    case ErrorCode::kInfeasibleScript: return "InfeasibleScript";
  }
  return "Unknown";
}

}  // namespace mergelens
