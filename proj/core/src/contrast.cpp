#include "extctrl/contrast.hpp"

#include <limits>

#include "extctrl/error.hpp"

namespace extctrl {

Scale parse_scale(const std::string& s) {
  if (s == "rd" || s == "risk_difference") return Scale::RiskDifference;
  if (s == "rr" || s == "risk_ratio") return Scale::RiskRatio;
  if (s == "or" || s == "odds_ratio") return Scale::OddsRatio;
  if (s == "md" || s == "mean_difference") return Scale::MeanDifference;
  if (s == "sd" || s == "survival_difference") return Scale::SurvivalDifference;
  throw Error(ErrorCode::PlanInvalid, "unknown scale '" + s + "'");
}

std::string to_string(Scale s) {
  switch (s) {
    case Scale::RiskDifference: return "rd";
    case Scale::RiskRatio: return "rr";
    case Scale::OddsRatio: return "or";
    case Scale::MeanDifference: return "md";
    case Scale::SurvivalDifference: return "sd";
  }
  return "";
}

std::string scale_label(Scale s) {
  switch (s) {
    case Scale::RiskDifference: return "risk difference";
    case Scale::RiskRatio: return "risk ratio";
    case Scale::OddsRatio: return "odds ratio";
    case Scale::MeanDifference: return "mean difference";
    case Scale::SurvivalDifference: return "survival probability difference";
  }
  return "";
}

std::string to_string(ContrastStatus s) {
  switch (s) {
    case ContrastStatus::Finite: return "finite";
    case ContrastStatus::Infinite: return "infinite";
    case ContrastStatus::Undefined: return "undefined";
  }
  return "";
}

void check_scale(OutcomeKind kind, Scale scale) {
  bool ok = false;
  switch (kind) {
    case OutcomeKind::Binary:
      ok = scale == Scale::RiskDifference || scale == Scale::RiskRatio || scale == Scale::OddsRatio;
      break;
    case OutcomeKind::Continuous:
      ok = scale == Scale::MeanDifference;
      break;
    case OutcomeKind::TimeToEvent:
      ok = scale == Scale::SurvivalDifference || scale == Scale::RiskDifference;
      break;
  }
  if (!ok)
    throw Error(ErrorCode::ScaleIncompatibleWithOutcome,
                scale_label(scale) + " is not defined for " + to_string(kind) + " outcomes");
}

namespace {
ContrastValue ratio(double num, double den) {
  if (den == 0.0) {
    if (num == 0.0) return {std::numeric_limits<double>::quiet_NaN(), ContrastStatus::Undefined};
    return {std::numeric_limits<double>::infinity(), ContrastStatus::Infinite};
  }
  return {num / den, ContrastStatus::Finite};
}
}  // namespace

ContrastValue contrast(double trial, double external, Scale scale) {
  switch (scale) {
    case Scale::RiskDifference:
    case Scale::MeanDifference:
    case Scale::SurvivalDifference:
      return {trial - external, ContrastStatus::Finite};
    case Scale::RiskRatio:
      return ratio(trial, external);
    case Scale::OddsRatio:
      // p1 (1 - p0) / (p0 (1 - p1)) avoids dividing by a zero odds
      return ratio(trial * (1.0 - external), external * (1.0 - trial));
  }
  return {};
}

}  // namespace extctrl
