#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace extctrl {

enum class ErrorCode {
  // ingestion
  MissingColumn,
  EmptyDataset,
  NonNumericCovariate,
  MissingValue,
  UnknownGroupLabel,
  InvalidOutcome,
  DuplicateCovariate,
  SchemaViolation,
  ProportionOutOfRange,
  ResponderCountExceedsN,
  UnknownCovariate,
  IoError,
  // model fitting
  InsufficientData,
  ConstantResponse,
  RankDeficientDesign,
  SeparationDetected,
  NoConvergence,
  DegenerateScores,
  TargetOutsideSupport,
  CollinearCovariates,
  // estimation
  AllWeightsZero,
  ScaleIncompatibleWithOutcome,
  ZeroDenominator,
  ParameterOutOfRange,
  TooManyReplicateFailures,
  InvalidConfig,
  EstimandMismatch,
  // plans
  PlanInvalid,
  PositivityHardFail,
};

/// Coarse grouping used for process exit codes.
enum class ErrorFamily { Plan, Data, Solver, Positivity };

std::string_view to_string(ErrorCode code);
ErrorFamily family_of(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }
  ErrorFamily family() const noexcept { return family_of(code_); }

 private:
  ErrorCode code_;
};

}  // namespace extctrl
