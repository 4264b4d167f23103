#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace taskdialog {

enum class ErrorCode {
  kInvalidArgument,
  kPreconditionViolation,
  // ingest
  kMalformedTimestamp,
  kEmptyTranscript,
  kMalformedRow,
  kUnknownErrorLabel,
  kMissingFile,
  kDuplicateRecordingId,
  // llm-client
  kUnknownTemplate,
  kUnboundPlaceholder,
  kUnusedVariable,
  kCassetteMiss,
  kEndpointError,
  // instruction / dialogue
  kUnparseableCompletion,
  kEmptySteps,
  kAllStepsFiltered,
  kTokenCollision,
  kCoverageFailure,
  // localize
  kDanglingSourceRef,
  kNoLocalizableSteps,
  kMissingSpan,
  kEmptyTruth,
  // dataset
  kValidationFailure,
  kEmptyCorpus,
  kSchemaViolation,
  kIOFailure,
  // eval
  kEmptyInput,
  kUnparseableScore,
  // cli
  kConfigError,
  kStageInputMissing,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above; the
/// message names the offending input (path, line, field) when one exists.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code),
        message_(message) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& message() const noexcept { return message_; }

  /// Same code, message prefixed with `context`.
  Error with_context(const std::string& context) const { return Error(code_, context + ": " + message_); }

 private:
  ErrorCode code_;
  std::string message_;
};

}  // namespace taskdialog
