#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace xlmap {

enum class ErrorCode {
  DegenerateVector,
  DimensionMismatch,
  SvdFailure,
  InsufficientVectors,
  FormatError,
  LengthMismatch,
  IndexOutOfRange,
  TooFewVectors,
  CurveTooShort,
  EmptyCollection,
  IoError,
  VersionMismatch,
  MissingLabel,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code);

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::DegenerateVector: return "DegenerateVector";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::SvdFailure: return "SvdFailure";
    case ErrorCode::InsufficientVectors: return "InsufficientVectors";
    case ErrorCode::FormatError: return "FormatError";
    case ErrorCode::LengthMismatch: return "LengthMismatch";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::TooFewVectors: return "TooFewVectors";
    case ErrorCode::CurveTooShort: return "CurveTooShort";
    case ErrorCode::EmptyCollection: return "EmptyCollection";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::VersionMismatch: return "VersionMismatch";
    case ErrorCode::MissingLabel: return "MissingLabel";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

}  // namespace xlmap
