#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace ttcstop {

enum class ErrorCode {
  kInvalidArgument,
  kConfigError,
  kSpecError,
  kSchemaError,
  kFileNotFound,
  kIoError,
  kInvalidQuery,
  kTooFewPoints,
  kNonConvergence,
  kOutOfOrderCheckpoint,
  kEmptyDataset,
  kKExceedsSamples,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
    case ErrorCode::kConfigError: return "ConfigError";
    case ErrorCode::kSpecError: return "SpecError";
    case ErrorCode::kSchemaError: return "SchemaError";
    case ErrorCode::kFileNotFound: return "FileNotFound";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kInvalidQuery: return "InvalidQuery";
    case ErrorCode::kTooFewPoints: return "TooFewPoints";
    case ErrorCode::kNonConvergence: return "NonConvergence";
    case ErrorCode::kOutOfOrderCheckpoint: return "OutOfOrderCheckpoint";
    case ErrorCode::kEmptyDataset: return "EmptyDataset";
    case ErrorCode::kKExceedsSamples: return "KExceedsSamples";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so the
/// CLI can map it onto a stable exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace ttcstop
