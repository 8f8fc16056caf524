#pragma once

#include <string>
#include <vector>

#include "extctrl/dataset.hpp"
#include "extctrl/glm.hpp"

namespace extctrl {

/// Logistic model for Pr(Trial | covariates) with per-subject scores in
/// dataset row order.
struct PropensityModel {
  GlmFit glm;
  std::vector<double> scores;
  /// Covariates entering the model, in coefficient order after the intercept.
  std::vector<std::string> covariate_names;
  /// Requested covariates left out because they are constant over all subjects.
  std::vector<std::string> dropped_constant;
};

/// Fits the propensity model on the named covariates (all covariates when the
/// list is empty). Covariates that are constant over the whole dataset carry
/// no information and are dropped before fitting.
///
/// Scores are never clipped. Throws DegenerateScores if any score rounds to 0
/// or 1, and propagates GLM errors.
PropensityModel estimate_propensity(const Dataset& data, const std::vector<std::string>& covariates = {},
                                    const GlmOptions& options = {});

struct GroupScoreRange {
  double min = 0.0;
  double max = 0.0;
  std::size_t n = 0;
  std::size_t n_outside_band = 0;
  double prop_outside_band = 0.0;
};

struct PositivityReport {
  GroupScoreRange trial;
  GroupScoreRange external;
  /// Intersection of the two group ranges; empty when lower > upper.
  double overlap_lower = 0.0;
  double overlap_upper = 0.0;
  bool overlap_empty = false;
  double band = 0.0;
  /// Share of a group outside (band, 1 - band) above which overlap is flagged.
  double max_outside_share = 0.2;
  bool insufficient_overlap = false;
};

/// Common-support summary. A subject is outside the band when its score is
/// <= band or >= 1 - band. Flags insufficient overlap when the group ranges
/// do not intersect or more than 20% of either group falls outside the band.
PositivityReport positivity_report(const PropensityModel& model, const Dataset& data, double band);

nlohmann::json to_json(const PositivityReport& r);

}  // namespace extctrl
