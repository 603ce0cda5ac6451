#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace cdse {

// Every failure the library reports carries one of these codes so callers
// (tests, the CLI's exit-code mapping) can branch without parsing messages.
enum class ErrorCode {
  // signal_core
  kLengthOutOfRange,
  kPlanMismatch,
  kNegativeInput,
  kUnsupportedSampleRate,
  kNonFinite,
  kMalformed,
  // models
  kInvalidSpec,
  kFixedLengthViolation,
  kShapeMismatch,
  kDomainMismatch,
  kCheckpointMismatch,
  // losses
  kProbabilityDomain,
  kLengthMismatch,
  kLambdaMismatch,
  kMissingPhase,
  kZeroValuedTerm,
  kInvalidLossConfig,
  // data
  kSilentClean,
  kNoiseTooShort,
  kSplitOverlap,
  kIo,
  kFormat,
  kEmptyDataset,
  // metrics
  kTooShort,
  kAllSilent,
  kMissingPesq,
  kEmptyReference,
  kAlignment,
  kEndpointUnreachable,
  kTimeout,
  kExternalTool,
  // harness
  kIllegalCombination,
  kConfig,
};

enum class ErrorCategory { kConfig, kData, kExternalService, kUsage };

ErrorCategory category_of(ErrorCode code);
std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  ErrorCategory category() const noexcept { return category_of(code_); }

 private:
  ErrorCode code_;
};

// Raised by external-service wrappers; remembers how many attempts were made.
class ExternalServiceError : public Error {
 public:
  ExternalServiceError(ErrorCode code, const std::string& message, int attempts)
      : Error(code, message), attempts_(attempts) {}
  int attempts() const noexcept { return attempts_; }

 private:
  int attempts_;
};

[[noreturn]] void fail(ErrorCode code, const std::string& message);

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace cdse
