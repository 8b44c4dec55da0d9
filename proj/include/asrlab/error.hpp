#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace asrlab {

enum class ErrorCode {
  SignalTooShort,
  SingularToeplitz,
  InsufficientData,
  DimensionMismatch,
  LabelOutOfRange,
  EmptyLabels,
  ZeroPrior,
  AllPathsImpossible,
  InvalidChromosome,
  ParseError,
  InconsistentVocabulary,
  IoError,
  TooFewRepetitions,
  InvalidCounts,
  UnknownUtterance,
  MismatchedSpeakers,
  InvalidConfig,
  PreconditionFailed,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::SignalTooShort: return "SignalTooShort";
    case ErrorCode::SingularToeplitz: return "SingularToeplitz";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::EmptyLabels: return "EmptyLabels";
    case ErrorCode::ZeroPrior: return "ZeroPrior";
    case ErrorCode::AllPathsImpossible: return "AllPathsImpossible";
    case ErrorCode::InvalidChromosome: return "InvalidChromosome";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::InconsistentVocabulary: return "InconsistentVocabulary";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::TooFewRepetitions: return "TooFewRepetitions";
    case ErrorCode::InvalidCounts: return "InvalidCounts";
    case ErrorCode::UnknownUtterance: return "UnknownUtterance";
    case ErrorCode::MismatchedSpeakers: return "MismatchedSpeakers";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::PreconditionFailed: return "PreconditionFailed";
  }
  return "Unknown";
}

// Every failure in the library is reported through this type; code() lets
// callers and tests discriminate without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : Error(code, message, std::string(to_string(code)) + ": " + message) {}

  ErrorCode code() const noexcept { return code_; }
  const std::string& message() const noexcept { return message_; }

  // The same error with "[stage] " in front of the full text.
  Error in_stage(const std::string& stage) const { return Error(code_, message_, "[" + stage + "] " + what()); }

 private:
  Error(ErrorCode code, std::string message, const std::string& full)
      : std::runtime_error(full), code_(code), message_(std::move(message)) {}

  ErrorCode code_;
  std::string message_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

inline void require(bool condition, ErrorCode code, const std::string& message) {
  if (!condition) fail(code, message);
}

}  // namespace asrlab
