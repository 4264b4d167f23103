#include "taskdialog/error.hpp"

namespace taskdialog {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kPreconditionViolation: return "PreconditionViolation";
    case ErrorCode::kMalformedTimestamp: return "MalformedTimestamp";
    case ErrorCode::kEmptyTranscript: return "EmptyTranscript";
    case ErrorCode::kMalformedRow: return "MalformedRow";
    case ErrorCode::kUnknownErrorLabel: return "UnknownErrorLabel";
    case ErrorCode::kMissingFile: return "MissingFile";
    case ErrorCode::kDuplicateRecordingId: return "DuplicateRecordingId";
    case ErrorCode::kUnknownTemplate: return "UnknownTemplate";
    case ErrorCode::kUnboundPlaceholder: return "UnboundPlaceholder";
    case ErrorCode::kUnusedVariable: return "UnusedVariable";
    case ErrorCode::kCassetteMiss: return "CassetteMiss";
    case ErrorCode::kEndpointError: return "EndpointError";
    case ErrorCode::kUnparseableCompletion: return "UnparseableCompletion";
    case ErrorCode::kEmptySteps: return "EmptySteps";
    case ErrorCode::kAllStepsFiltered: return "AllStepsFiltered";
    case ErrorCode::kTokenCollision: return "TokenCollision";
    case ErrorCode::kCoverageFailure: return "CoverageFailure";
    case ErrorCode::kDanglingSourceRef: return "DanglingSourceRef";
    case ErrorCode::kNoLocalizableSteps: return "NoLocalizableSteps";
    case ErrorCode::kMissingSpan: return "MissingSpan";
    case ErrorCode::kEmptyTruth: return "EmptyTruth";
    case ErrorCode::kValidationFailure: return "ValidationFailure";
    case ErrorCode::kEmptyCorpus: return "EmptyCorpus";
    case ErrorCode::kSchemaViolation: return "SchemaViolation";
    case ErrorCode::kIOFailure: return "IOFailure";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kUnparseableScore: return "UnparseableScore";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kStageInputMissing: return "StageInputMissing";
  }
  return "Unknown";
}

}  // namespace taskdialog
