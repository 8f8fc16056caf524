#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "extctrl/balancing.hpp"
#include "extctrl/contrast.hpp"
#include "extctrl/dataset.hpp"

namespace extctrl {

struct ConfidenceInterval {
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.95;
  int replicates = 0;
  int failures = 0;
};

/// Result of one comparison, with everything needed to reproduce it.
struct EffectReport {
  std::string method;
  std::string estimand;
  std::string target_population;
  Scale scale = Scale::RiskDifference;
  double estimate = 0.0;
  ContrastStatus status = ContrastStatus::Finite;
  std::optional<ConfidenceInterval> ci;
  /// Outcome summary per group on its natural scale.
  double trial_value = 0.0;
  double external_value = 0.0;
  std::optional<double> ess_trial;
  std::optional<double> ess_external;
  std::vector<std::string> warnings;
  nlohmann::json diagnostics = nlohmann::json::object();
  nlohmann::json provenance = nlohmann::json::object();
};

nlohmann::json to_json(const EffectReport& r);

/// Hajek-weighted outcome means per group: (trial, external).
std::pair<double, double> weighted_outcome_means(const Dataset& data, std::span<const double> weights);

/// Weighted contrast of binary or continuous outcomes. Throws AllWeightsZero,
/// ScaleIncompatibleWithOutcome, or ZeroDenominator for ratio scales that
/// are infinite or undefined.
EffectReport weighted_mean_contrast(const Dataset& data, const WeightSet& weights, Scale scale);

/// Product-limit curve. Times are the distinct event times.
struct SurvivalCurve {
  std::vector<double> time;
  std::vector<double> survival;
  std::vector<double> at_risk;  // weighted risk set just before each time
  std::vector<double> events;   // weighted events at each time
  /// Largest observed time, event or censoring.
  double last_time = 0.0;

  /// Right-continuous step evaluation.
  double survival_at(double t) const;
  /// First time the curve reaches 0.5 or below; nullopt when not reached.
  std::optional<double> median() const;
};

/// Weighted Kaplan-Meier. At tied times events are counted before
/// censorings, so subjects censored at t are still at risk at t.
SurvivalCurve weighted_km(std::span<const double> time, std::span<const int> event, std::span<const double> weights);
/// Curve for one group of a time-to-event dataset.
SurvivalCurve weighted_km(const Dataset& data, std::span<const double> weights, Group group);

/// S_trial(horizon) - S_external(horizon). Flags, but does not reject, a
/// horizon past the last observed time of either curve.
EffectReport survival_contrast(const SurvivalCurve& trial, const SurvivalCurve& external, double horizon);

nlohmann::json to_json(const SurvivalCurve& c);
std::string curve_to_csv(const SurvivalCurve& c);

}  // namespace extctrl
