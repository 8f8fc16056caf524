#include "extctrl/error.hpp"

namespace extctrl {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::MissingColumn: return "MissingColumn";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::NonNumericCovariate: return "NonNumericCovariate";
    case ErrorCode::MissingValue: return "MissingValue";
    case ErrorCode::UnknownGroupLabel: return "UnknownGroupLabel";
    case ErrorCode::InvalidOutcome: return "InvalidOutcome";
    case ErrorCode::DuplicateCovariate: return "DuplicateCovariate";
    case ErrorCode::SchemaViolation: return "SchemaViolation";
    case ErrorCode::ProportionOutOfRange: return "ProportionOutOfRange";
    case ErrorCode::ResponderCountExceedsN: return "ResponderCountExceedsN";
    case ErrorCode::UnknownCovariate: return "UnknownCovariate";
    case ErrorCode::IoError: return "IoError";
    case ErrorCode::InsufficientData: return "InsufficientData";
    case ErrorCode::ConstantResponse: return "ConstantResponse";
    case ErrorCode::RankDeficientDesign: return "RankDeficientDesign";
    case ErrorCode::SeparationDetected: return "SeparationDetected";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::DegenerateScores: return "DegenerateScores";
    case ErrorCode::TargetOutsideSupport: return "TargetOutsideSupport";
    case ErrorCode::CollinearCovariates: return "CollinearCovariates";
    case ErrorCode::AllWeightsZero: return "AllWeightsZero";
    case ErrorCode::ScaleIncompatibleWithOutcome: return "ScaleIncompatibleWithOutcome";
    case ErrorCode::ZeroDenominator: return "ZeroDenominator";
    case ErrorCode::ParameterOutOfRange: return "ParameterOutOfRange";
    case ErrorCode::TooManyReplicateFailures: return "TooManyReplicateFailures";
    case ErrorCode::InvalidConfig: return "InvalidConfig";
    case ErrorCode::EstimandMismatch: return "EstimandMismatch";
    case ErrorCode::PlanInvalid: return "PlanInvalid";
    case ErrorCode::PositivityHardFail: return "PositivityHardFail";
  }
  return "Unknown";
}

ErrorFamily family_of(ErrorCode code) {
  switch (code) {
    case ErrorCode::PositivityHardFail:
      return ErrorFamily::Positivity;
    case ErrorCode::PlanInvalid:
    case ErrorCode::InvalidConfig:
    case ErrorCode::ParameterOutOfRange:
    case ErrorCode::EstimandMismatch:
      return ErrorFamily::Plan;
    case ErrorCode::InsufficientData:
    case ErrorCode::ConstantResponse:
    case ErrorCode::RankDeficientDesign:
    case ErrorCode::SeparationDetected:
    case ErrorCode::NoConvergence:
    case ErrorCode::DegenerateScores:
    case ErrorCode::TargetOutsideSupport:
    case ErrorCode::CollinearCovariates:
    case ErrorCode::TooManyReplicateFailures:
      return ErrorFamily::Solver;
    default:
      return ErrorFamily::Data;
  }
}

}  // namespace extctrl
