#pragma once

#include <stdexcept>
#include <string>

namespace logitcond {

enum class ErrorCode {
  InvalidArgument,
  ParseError,
  BadLabel,
  Io,
  NonFinite,
  ZeroGradient,
  NotSymmetric,
  MethodUnavailable,
  NotApplicable,
  NotAttained,
  UncertifiedConditioning,
  WrongStepRule,
  WrongOption,
  NotSeparable,
  TooFewTrials,
};

inline const char* to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::BadLabel: return "BadLabel";
    case ErrorCode::Io: return "Io";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::ZeroGradient: return "ZeroGradient";
    case ErrorCode::NotSymmetric: return "NotSymmetric";
    case ErrorCode::MethodUnavailable: return "MethodUnavailable";
    case ErrorCode::NotApplicable: return "NotApplicable";
    case ErrorCode::NotAttained: return "NotAttained";
    case ErrorCode::UncertifiedConditioning: return "UncertifiedConditioning";
    case ErrorCode::WrongStepRule: return "WrongStepRule";
    case ErrorCode::WrongOption: return "WrongOption";
    case ErrorCode::NotSeparable: return "NotSeparable";
    case ErrorCode::TooFewTrials: return "TooFewTrials";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

// row and col are 1-based positions in the source file; col is 0 when unknown
class ParseError : public Error {
 public:
  ParseError(long row, long col, const std::string& what)
      : Error(ErrorCode::ParseError,
              "row " + std::to_string(row) + ", col " + std::to_string(col) + ": " + what),
        row_(row), col_(col) {}

  long row() const noexcept { return row_; }
  long col() const noexcept { return col_; }

 private:
  long row_;
  long col_;
};

class BadLabel : public Error {
 public:
  BadLabel(long row, const std::string& token)
      : Error(ErrorCode::BadLabel, "row " + std::to_string(row) + ": label '" + token + "'"),
        row_(row) {}

  long row() const noexcept { return row_; }

 private:
  long row_;
};

}  // namespace logitcond
