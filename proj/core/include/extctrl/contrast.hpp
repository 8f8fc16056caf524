#pragma once

#include <string>

#include "extctrl/dataset.hpp"

namespace extctrl {

enum class Scale { RiskDifference, RiskRatio, OddsRatio, MeanDifference, SurvivalDifference };

/// "rd", "rr", "or", "md", "sd" (survival difference at a horizon).
Scale parse_scale(const std::string& s);
std::string to_string(Scale s);
std::string scale_label(Scale s);

/// Throws ScaleIncompatibleWithOutcome unless the scale makes sense for the
/// outcome: rd/rr/or for binary, md for continuous, sd (or rd) for survival.
void check_scale(OutcomeKind kind, Scale scale);

enum class ContrastStatus { Finite, Infinite, Undefined };

struct ContrastValue {
  double value = 0.0;
  ContrastStatus status = ContrastStatus::Finite;
  bool finite() const { return status == ContrastStatus::Finite; }
};

/// Contrast of a trial summary against an external summary. Ratio scales
/// with a zero denominator give Infinite (nonzero numerator) or Undefined.
ContrastValue contrast(double trial, double external, Scale scale);

std::string to_string(ContrastStatus s);

}  // namespace extctrl
