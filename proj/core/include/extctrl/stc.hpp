#pragma once

#include <string>
#include <vector>

#include "extctrl/dataset.hpp"
#include "extctrl/estimators.hpp"
#include "extctrl/glm.hpp"

namespace extctrl {

enum class Link { Identity, Logit };

Link parse_link(const std::string& s);
std::string to_string(Link l);

struct StcResult {
  GlmFit outcome_model;
  Link link = Link::Identity;
  Scale scale = Scale::MeanDifference;
  std::vector<std::string> covariates;
  /// Predicted trial-treatment outcome in the external population.
  double predicted_external_outcome = 0.0;
  double observed_external_outcome = 0.0;
  double effect = 0.0;
  ContrastStatus status = ContrastStatus::Finite;
  std::vector<std::string> warnings;
};

/// Fits the outcome model on trial subjects (linear for Identity, logistic for
/// Logit), evaluates it at the aggregate covariate means and contrasts the
/// prediction with the observed aggregate outcome. Only trial rows are used.
StcResult stc_estimate(const Dataset& data, const AggregateSummary& target, const std::vector<std::string>& covariates,
                       Link link, Scale scale, const GlmOptions& options = {});

EffectReport to_report(const StcResult& r);

}  // namespace extctrl
