#include "cdse/error.hpp"

namespace cdse {

ErrorCategory category_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidSpec:
    case ErrorCode::kInvalidLossConfig:
    case ErrorCode::kLambdaMismatch:
    case ErrorCode::kIllegalCombination:
    case ErrorCode::kConfig:
    case ErrorCode::kCheckpointMismatch:
      return ErrorCategory::kConfig;
    case ErrorCode::kSilentClean:
    case ErrorCode::kNoiseTooShort:
    case ErrorCode::kSplitOverlap:
    case ErrorCode::kIo:
    case ErrorCode::kFormat:
    case ErrorCode::kEmptyDataset:
    case ErrorCode::kUnsupportedSampleRate:
    case ErrorCode::kNonFinite:
    case ErrorCode::kTooShort:
    case ErrorCode::kAllSilent:
    case ErrorCode::kAlignment:
    case ErrorCode::kLengthOutOfRange:
    case ErrorCode::kEmptyReference:
    case ErrorCode::kZeroValuedTerm:
      return ErrorCategory::kData;
    case ErrorCode::kEndpointUnreachable:
    case ErrorCode::kTimeout:
    case ErrorCode::kExternalTool:
    case ErrorCode::kMissingPesq:
      return ErrorCategory::kExternalService;
    default:
      return ErrorCategory::kUsage;
  }
}

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kLengthOutOfRange: return "length-out-of-range";
    case ErrorCode::kPlanMismatch: return "plan-mismatch";
    case ErrorCode::kNegativeInput: return "negative-input";
    case ErrorCode::kUnsupportedSampleRate: return "unsupported-sample-rate";
    case ErrorCode::kNonFinite: return "non-finite";
    case ErrorCode::kMalformed: return "malformed";
    case ErrorCode::kInvalidSpec: return "invalid-spec";
    case ErrorCode::kFixedLengthViolation: return "fixed-length-violation";
    case ErrorCode::kShapeMismatch: return "shape-mismatch";
    case ErrorCode::kDomainMismatch: return "domain-mismatch";
    case ErrorCode::kCheckpointMismatch: return "checkpoint-mismatch";
    case ErrorCode::kProbabilityDomain: return "probability-domain";
    case ErrorCode::kLengthMismatch: return "length-mismatch";
    case ErrorCode::kLambdaMismatch: return "lambda-mismatch";
    case ErrorCode::kMissingPhase: return "missing-phase";
    case ErrorCode::kZeroValuedTerm: return "zero-valued-term";
    case ErrorCode::kInvalidLossConfig: return "invalid-loss-config";
    case ErrorCode::kSilentClean: return "silent-clean";
    case ErrorCode::kNoiseTooShort: return "noise-too-short";
    case ErrorCode::kSplitOverlap: return "split-overlap";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kFormat: return "format";
    case ErrorCode::kEmptyDataset: return "empty-dataset";
    case ErrorCode::kTooShort: return "too-short";
    case ErrorCode::kAllSilent: return "all-silent";
    case ErrorCode::kMissingPesq: return "missing-pesq";
    case ErrorCode::kEmptyReference: return "empty-reference";
    case ErrorCode::kAlignment: return "alignment";
    case ErrorCode::kEndpointUnreachable: return "endpoint-unreachable";
    case ErrorCode::kTimeout: return "timeout";
    case ErrorCode::kExternalTool: return "external-tool";
    case ErrorCode::kIllegalCombination: return "illegal-combination";
    case ErrorCode::kConfig: return "config";
  }
  return "unknown";
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

void fail(ErrorCode code, const std::string& message) { throw Error(code, message); }

}  // namespace cdse
