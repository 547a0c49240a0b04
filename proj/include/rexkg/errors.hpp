#pragma once

#include <stdexcept>
#include <string>

namespace rexkg {

enum class ErrorCode {
  IoError,
  MalformedLine,
  DuplicateReportId,
  UnknownEntityType,
  DanglingRelationRef,
  DuplicateCui,
  AliasConflict,
  DimensionMismatch,
  DuplicateTerm,
  ZeroVector,
  EmptyCandidateSet,
  NetworkError,
  BadResponse,
  SizeTooLarge,
  FormatVersionMismatch,
  MalformedGraphFile,
  UnsupportedFormat,
  EmptySelection,
  LengthMismatch,
  AllRowsEmpty,
  NotConnected,
  NoSubgraphs,
  NoTargetNodes,
  UnknownCategory,
};

inline const char* error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::MalformedLine: return "MalformedLine";
    case ErrorCode::DuplicateReportId: return "DuplicateReportId";
    case ErrorCode::UnknownEntityType: return "UnknownEntityType";
    case ErrorCode::DanglingRelationRef: return "DanglingRelationRef";
    case ErrorCode::DuplicateCui: return "DuplicateCui";
    case ErrorCode::AliasConflict: return "AliasConflict";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DuplicateTerm: return "DuplicateTerm";
    case ErrorCode::ZeroVector: return "ZeroVector";
    case ErrorCode::EmptyCandidateSet: return "EmptyCandidateSet";
    case ErrorCode::NetworkError: return "NetworkError";
    case ErrorCode::BadResponse: return "BadResponse";
    case ErrorCode::SizeTooLarge: return "SizeTooLarge";
    case ErrorCode::FormatVersionMismatch: return "FormatVersionMismatch";
    case ErrorCode::MalformedGraphFile: return "MalformedGraphFile";
    case ErrorCode::UnsupportedFormat: return "UnsupportedFormat";
    case ErrorCode::EmptySelection: return "EmptySelection";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::AllRowsEmpty: return "AllRowsEmpty";
    case ErrorCode::NotConnected: return "NotConnected";
    case ErrorCode::NoSubgraphs: return "NoSubgraphs";
    case ErrorCode::NoTargetNodes: return "NoTargetNodes";
    case ErrorCode::UnknownCategory: return "UnknownCategory";
  }
  return "UnknownError";
}

// Single exception type for the whole library; the code distinguishes the
// failure classes the callers react to.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace rexkg
