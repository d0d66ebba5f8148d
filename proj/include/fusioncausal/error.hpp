#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fusioncausal {

enum class ErrorCode {
  MissingColumn,
  NonBinaryTreatment,
  LongTermOutcomeInExperiment,
  EmptyArm,
  EmptyDataset,
  EmptyCell,
  TargetUnavailable,
  SingularDesign,
  OneClassOnly,
  TooManyLevels,
  FoldTooSmall,
  PositivityViolation,
  ZNotBinary,
  WeakInstrument,
  IllConditioned,
  NoProxy,
  MissingBridge,
  UnsupportedContinuousM,
  MissingNuisance,
  InvalidSpec,
  MethodUnavailable,
  ZeroProbabilityCell,
  UnsupportedViolation,
  UnsupportedEstimand,
  InvalidConfig,
  ParseError,
};

inline std::string_view to_string(ErrorCode c) {
  switch (c) {
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::NonBinaryTreatment: return "NonBinaryTreatment";
    case ErrorCode::LongTermOutcomeInExperiment: return "LongTermOutcomeInExperiment";
    case ErrorCode::EmptyArm: return "EmptyArm";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::EmptyCell: return "EmptyCell";
    case ErrorCode::TargetUnavailable: return "TargetUnavailable";
    case ErrorCode::SingularDesign: return "SingularDesign";
    case ErrorCode::OneClassOnly: return "OneClassOnly";
    case ErrorCode::TooManyLevels: return "TooManyLevels";
    case ErrorCode::FoldTooSmall: return "FoldTooSmall";
    case ErrorCode::PositivityViolation: return "PositivityViolation";
    case ErrorCode::ZNotBinary: return "ZNotBinary";
    case ErrorCode::WeakInstrument: return "WeakInstrument";
    case ErrorCode::IllConditioned: return "IllConditioned";
    case ErrorCode::NoProxy: return "NoProxy";
    case ErrorCode::MissingBridge: return "MissingBridge";
    case ErrorCode::UnsupportedContinuousM: return "UnsupportedContinuousM";
    case ErrorCode::MissingNuisance: return "MissingNuisance";
    case ErrorCode::InvalidSpec: return "InvalidSpec";
    case ErrorCode::MethodUnavailable: return "MethodUnavailable";
    case ErrorCode::ZeroProbabilityCell: return "ZeroProbabilityCell";
    case ErrorCode::UnsupportedViolation: return "UnsupportedViolation";
    case ErrorCode::UnsupportedEstimand: return "UnsupportedEstimand";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

// Input problems map to 2, failures inside an estimator to 3.
inline int exit_code_for(ErrorCode c) {
  switch (c) {
    case ErrorCode::MissingColumn:
    case ErrorCode::NonBinaryTreatment:
    case ErrorCode::LongTermOutcomeInExperiment:
    case ErrorCode::EmptyArm:
    case ErrorCode::EmptyDataset:
    case ErrorCode::ZNotBinary:
    case ErrorCode::NoProxy:
    case ErrorCode::InvalidSpec:
    case ErrorCode::UnsupportedViolation:
    case ErrorCode::UnsupportedEstimand:
    case ErrorCode::InvalidConfig:
    case ErrorCode::ParseError:
    case ErrorCode::TooManyLevels:
    case ErrorCode::TargetUnavailable:
      return 2;
    default:
      return 3;
  }
}

class FusionError : public std::runtime_error {
 public:
  FusionError(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw FusionError(code, what); }

}  // namespace fusioncausal
