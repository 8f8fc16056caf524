#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "extctrl/balancing.hpp"
#include "extctrl/borrow.hpp"
#include "extctrl/dataset.hpp"
#include "extctrl/diagnostics.hpp"
#include "extctrl/estimators.hpp"
#include "extctrl/glm.hpp"
#include "extctrl/inference.hpp"
#include "extctrl/maic.hpp"
#include "extctrl/propensity.hpp"
#include "extctrl/stc.hpp"

// End-to-end analyses: estimand, diagnostics, comparison, optional bootstrap.
// Each fills EffectReport::provenance with the steps in that order.

namespace extctrl {

struct CommonAnalysisOptions {
  std::vector<std::string> covariates;
  Scale scale = Scale::RiskDifference;
  std::optional<BootstrapConfig> bootstrap;
  ComparabilityChecklist checklist;
  GlmOptions glm;
};

struct WeightingOptions : CommonAnalysisOptions {
  Estimand estimand = Estimand::ate();
  /// Required for time-to-event outcomes.
  std::optional<double> horizon;
  double positivity_band = 0.05;
  double balance_threshold = 0.1;
  /// Throw PositivityHardFail when the positivity report flags poor overlap.
  bool fail_on_overlap = false;
};

struct WeightingResult {
  PropensityModel model;
  PositivityReport positivity;
  WeightSet weights;
  BalanceTable balance;
  EffectReport report;
  std::optional<SurvivalCurve> curve_trial;
  std::optional<SurvivalCurve> curve_external;
};

/// Propensity-score weighting analysis on individual-level data for both groups.
WeightingResult run_weighting(const Dataset& data, const WeightingOptions& options);

/// Point estimate of the weighting analysis, re-fitting the propensity model.
double weighting_estimate(const Dataset& data, const WeightingOptions& options);

struct MaicAnalysisOptions : CommonAnalysisOptions {
  MaicOptions maic;
  MaicCompareOptions compare;
};

struct MaicResult {
  MaicFit fit;
  Dataset trial;
  EffectReport report;
};

MaicResult run_maic(const Dataset& data, const AggregateSummary& target, const MaicAnalysisOptions& options);

struct StcAnalysisOptions : CommonAnalysisOptions {
  Link link = Link::Identity;
};

struct StcAnalysisResult {
  StcResult stc;
  EffectReport report;
};

StcAnalysisResult run_stc(const Dataset& data, const AggregateSummary& target, const StcAnalysisOptions& options);

struct PowerPriorOptions {
  double a0 = 0.0;
  double prior_alpha = 1.0;
  double prior_beta = 1.0;
  double level = 0.95;
  std::vector<double> sweep;
  /// The analyst's statement that the populations are comparable; required.
  bool assume_comparable = false;
};

/// Responders and size of one group with a binary outcome.
BinomialCounts count_responders(const Dataset& data, Group group);

/// Power-prior posterior for the trial response rate. Throws PlanInvalid
/// unless assume_comparable is set.
nlohmann::json run_power_prior(BinomialCounts trial, BinomialCounts external, const PowerPriorOptions& options);

/// Table of id, group, score, weight in dataset row order.
std::string weights_to_csv(const Dataset& data, std::span<const double> scores, std::span<const double> weights);

}  // namespace extctrl
