#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace numit {

enum class ErrorKind {
  CholeskyFailure,
  NotSymmetric,
  DimensionMismatch,
  OverlappingIndexSets,
  EmptyIndexSet,
  IndexOutOfRange,
  NegativeInformation,
  InconsistentInformation,
  ZeroTmi,
  ZeroChannel,
  BracketFailure,
  SamplingExhausted,
  EmptyEnsemble,
  UnstableSystem,
  RankDeficientRegressors,
  TooShortEpoch,
  TargetUnreachable,
  ZeroDynamics,
  InvalidArgument,
  TooFewVariables,
  DegenerateDesign,
  LengthMismatch,
  TooFewSamples,
  ConfigParse,
  Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries one of the kinds above so
/// callers (the ensemble retry loops, the CLI exit-code mapping) can branch
/// on it without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::CholeskyFailure: return "CholeskyFailure";
    case ErrorKind::NotSymmetric: return "NotSymmetric";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::OverlappingIndexSets: return "OverlappingIndexSets";
    case ErrorKind::EmptyIndexSet: return "EmptyIndexSet";
    case ErrorKind::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorKind::NegativeInformation: return "NegativeInformation";
    case ErrorKind::InconsistentInformation: return "InconsistentInformation";
    case ErrorKind::ZeroTmi: return "ZeroTmi";
    case ErrorKind::ZeroChannel: return "ZeroChannel";
    case ErrorKind::BracketFailure: return "BracketFailure";
    case ErrorKind::SamplingExhausted: return "SamplingExhausted";
    case ErrorKind::EmptyEnsemble: return "EmptyEnsemble";
    case ErrorKind::UnstableSystem: return "UnstableSystem";
    case ErrorKind::RankDeficientRegressors: return "RankDeficientRegressors";
    case ErrorKind::TooShortEpoch: return "TooShortEpoch";
    case ErrorKind::TargetUnreachable: return "TargetUnreachable";
    case ErrorKind::ZeroDynamics: return "ZeroDynamics";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::TooFewVariables: return "TooFewVariables";
    case ErrorKind::DegenerateDesign: return "DegenerateDesign";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::TooFewSamples: return "TooFewSamples";
    case ErrorKind::ConfigParse: return "ConfigParse";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

}  // namespace numit
