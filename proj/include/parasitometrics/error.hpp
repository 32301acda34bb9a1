#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace parasitometrics {

enum class ErrorCode {
  // input / schema
  kSchemaError,
  kMissingPatient,
  kLabelContradiction,
  kDuplicatePatient,
  kUnknownPatient,
  kEmptyInput,
  kNonFiniteInput,
  kOutOfRange,
  kInvalidRatio,
  kInvalidRates,
  kInvalidInput,
  kInvalidConfig,
  kMissingManualT,
  kZeroWbc,
  kNonpositiveParasitemia,
  kIoError,
  // degenerate data
  kNoEligiblePatients,
  kNoParasiteObjects,
  kNoNegativePatients,
  kNoDetections,
  kDegenerateClasses,
  kInsufficientPatients,
  kInsufficientPositives,
  kZeroSensitivity,
  kZeroFprSpread,
  kAllCandidatesDegenerate,
};

constexpr std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kSchemaError: return "SchemaError";
    case ErrorCode::kMissingPatient: return "MissingPatient";
    case ErrorCode::kLabelContradiction: return "LabelContradiction";
    case ErrorCode::kDuplicatePatient: return "DuplicatePatient";
    case ErrorCode::kUnknownPatient: return "UnknownPatient";
    case ErrorCode::kEmptyInput: return "EmptyInput";
    case ErrorCode::kNonFiniteInput: return "NonFiniteInput";
    case ErrorCode::kOutOfRange: return "OutOfRange";
    case ErrorCode::kInvalidRatio: return "InvalidRatio";
    case ErrorCode::kInvalidRates: return "InvalidRates";
    case ErrorCode::kInvalidInput: return "InvalidInput";
    case ErrorCode::kInvalidConfig: return "InvalidConfig";
    case ErrorCode::kMissingManualT: return "MissingManualT";
    case ErrorCode::kZeroWbc: return "ZeroWbc";
    case ErrorCode::kNonpositiveParasitemia: return "NonpositiveParasitemia";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kNoEligiblePatients: return "NoEligiblePatients";
    case ErrorCode::kNoParasiteObjects: return "NoParasiteObjects";
    case ErrorCode::kNoNegativePatients: return "NoNegativePatients";
    case ErrorCode::kNoDetections: return "NoDetections";
    case ErrorCode::kDegenerateClasses: return "DegenerateClasses";
    case ErrorCode::kInsufficientPatients: return "InsufficientPatients";
    case ErrorCode::kInsufficientPositives: return "InsufficientPositives";
    case ErrorCode::kZeroSensitivity: return "ZeroSensitivity";
    case ErrorCode::kZeroFprSpread: return "ZeroFprSpread";
    case ErrorCode::kAllCandidatesDegenerate: return "AllCandidatesDegenerate";
  }
  return "Unknown";
}

// True for errors caused by malformed input rather than by a cohort that is
// well-formed but unable to support the requested metric.
constexpr bool is_input_error(ErrorCode code) {
  return code <= ErrorCode::kIoError;
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

}  // namespace parasitometrics
