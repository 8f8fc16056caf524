#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "extctrl/balancing.hpp"
#include "extctrl/contrast.hpp"
#include "extctrl/dataset.hpp"
#include "extctrl/estimators.hpp"

namespace extctrl {

enum class CovariateType { Binary, Continuous };

struct CovariateSpec {
  std::string name;
  CovariateType type = CovariateType::Binary;
  double p = 0.5;     // binary: Pr(x = 1)
  double mean = 0.0;  // continuous: normal mean
  double sd = 1.0;    // continuous: normal sd
  /// Used to generate assignment and outcome but left out of the dataset
  /// (an unmeasured confounder).
  bool hidden = false;
};

/// Synthetic trial-versus-external scenario.
///
/// Covariates are drawn independently; Pr(Trial | x) = expit(assignment
/// intercept + gamma'x), and subjects are accepted into each group until the
/// requested sizes are reached. Outcomes given x and group t:
///   binary      Pr(Y = 1) = clamp(expit(b0 + beta'x) + effect * t, 0, 1)   (effect is a risk difference)
///   continuous  Y = b0 + beta'x + effect * t + N(0, noise_sd^2)
///   survival    exponential with log-hazard b0 + beta'x + effect * t,
///               uniform censoring on [0, C] with C calibrated to censoring_rate;
///               external follow-up is lengthened by time_lag (immortal time).
struct ScenarioConfig {
  int n_trial = 100;
  int n_external = 100;
  std::vector<CovariateSpec> covariates;
  double assignment_intercept = 0.0;
  std::vector<double> assignment_coefficients;
  OutcomeKind outcome_kind = OutcomeKind::Binary;
  double outcome_intercept = 0.0;
  std::vector<double> outcome_coefficients;
  double effect = 0.0;
  double noise_sd = 1.0;
  double censoring_rate = 0.0;
  /// Time at which survival-difference truth is evaluated.
  double horizon = 1.0;
  double time_lag = 0.0;
  std::uint64_t seed = 0;
  /// Draws for the Monte-Carlo truth oracle when any covariate is continuous.
  int truth_draws = 1'000'000;
};

ScenarioConfig parse_scenario(const nlohmann::json& j);
nlohmann::json to_json(const ScenarioConfig& c);

struct TruthValue {
  EstimandKind estimand = EstimandKind::ATE;
  Scale scale = Scale::RiskDifference;
  double value = 0.0;
  /// Monte-Carlo standard error of the oracle; 0 when computed exactly.
  double mc_se = 0.0;
};

struct TruthRecord {
  Scale scale = Scale::RiskDifference;
  TruthValue ate;
  TruthValue att;
  TruthValue atc;
  /// True when obtained by enumeration over a finite covariate support.
  bool exact = true;
  /// Pr(Trial) in the generating population.
  double marginal_trial_probability = 0.0;
  /// Logit shift from population to sample propensity: logit(pi) - logit(P1),
  /// pi = n_trial / (n_trial + n_external).
  double score_offset = 0.0;

  /// Throws EstimandMismatch for estimands other than ATE/ATT/ATC.
  const TruthValue& value_for(EstimandKind kind) const;
};

nlohmann::json to_json(const TruthRecord& t);

struct SimulatedData {
  Dataset data;
  TruthRecord truth;
  /// Pr(Trial | all covariates, hidden included) in the generated sample, row order.
  std::vector<double> true_scores;
};

/// Population-level true effects; the combined population mixes the trial and
/// external covariate distributions in proportion to the group sizes.
TruthRecord compute_truth(const ScenarioConfig& config);

/// Draws a dataset. Same config (seed included) gives the same dataset.
SimulatedData generate(const ScenarioConfig& config);
/// Same as generate() with a precomputed truth, skipping the oracle.
SimulatedData generate(const ScenarioConfig& config, const TruthRecord& truth);

/// report.estimate - truth.value. Throws EstimandMismatch when the report's
/// estimand or scale differs from the truth's.
double truth_gap(const EffectReport& report, const TruthValue& truth);

}  // namespace extctrl
