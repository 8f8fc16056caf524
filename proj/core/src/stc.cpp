#include "extctrl/stc.hpp"

#include "extctrl/error.hpp"

namespace extctrl {

Link parse_link(const std::string& s) {
  if (s == "identity") return Link::Identity;
  if (s == "logit") return Link::Logit;
  throw Error(ErrorCode::PlanInvalid, "unknown link '" + s + "'");
}

std::string to_string(Link l) { return l == Link::Identity ? "identity" : "logit"; }

StcResult stc_estimate(const Dataset& data, const AggregateSummary& target, const std::vector<std::string>& covariates,
                       Link link, Scale scale, const GlmOptions& options) {
  if (covariates.empty())
    throw Error(ErrorCode::InvalidConfig, "STC needs an explicit list of prognostic variables and effect modifiers");
  const Dataset trial = data.has_external() ? data.subset(Group::Trial) : data;
  const OutcomeKind kind = trial.outcome_kind();
  if (kind == OutcomeKind::TimeToEvent)
    throw Error(ErrorCode::ScaleIncompatibleWithOutcome, "STC supports binary and continuous outcomes only");
  if ((link == Link::Logit) != (kind == OutcomeKind::Binary))
    throw Error(ErrorCode::ScaleIncompatibleWithOutcome,
                to_string(link) + " link does not match a " + to_string(kind) + " outcome");
  if (target.outcome_kind != kind)
    throw Error(ErrorCode::ScaleIncompatibleWithOutcome, "aggregate outcome kind differs from the trial outcome");
  check_scale(kind, scale);

  const Eigen::MatrixXd X = trial.design_matrix(covariates);
  Eigen::VectorXd y(X.rows());
  for (std::size_t i = 0; i < trial.size(); ++i) {
    const auto& rec = trial.records()[i];
    if (!rec.outcome) throw Error(ErrorCode::MissingValue, "subject '" + rec.id + "' has no outcome");
    y(static_cast<Eigen::Index>(i)) = *rec.outcome;
  }

  StcResult r;
  r.link = link;
  r.scale = scale;
  r.covariates = covariates;
  r.outcome_model = link == Link::Logit ? fit_logistic(X, y, options) : fit_linear(X, y);

  double eta = r.outcome_model.coefficients(0);
  for (std::size_t j = 0; j < covariates.size(); ++j)
    eta += r.outcome_model.coefficients(static_cast<Eigen::Index>(j + 1)) * target.mean_of(covariates[j]);
  r.predicted_external_outcome = link == Link::Logit ? expit(eta) : eta;
  r.observed_external_outcome = target.outcome_value();

  const auto c = contrast(r.predicted_external_outcome, r.observed_external_outcome, scale);
  r.effect = c.value;
  r.status = c.status;
  if (link == Link::Logit)
    r.warnings.push_back(
        "logit link evaluated at the aggregate covariate means: the prediction is for an average-covariate "
        "subject and differs from the population-average outcome (non-collapsibility)");
  r.warnings.push_back(
      "unanchored comparison: assumes conditional constancy of absolute effects given the modeled covariates");
  if (!c.finite()) r.warnings.push_back("InfiniteContrast: " + scale_label(scale) + " has a zero cell");
  return r;
}

EffectReport to_report(const StcResult& r) {
  EffectReport rep;
  rep.method = "stc";
  rep.estimand = "ATC";
  rep.target_population = "external control population";
  rep.scale = r.scale;
  rep.estimate = r.effect;
  rep.status = r.status;
  rep.trial_value = r.predicted_external_outcome;
  rep.external_value = r.observed_external_outcome;
  rep.warnings = r.warnings;
  rep.diagnostics["link"] = to_string(r.link);
  rep.diagnostics["covariates"] = r.covariates;
  rep.diagnostics["coefficients"] =
      std::vector<double>(r.outcome_model.coefficients.data(),
                          r.outcome_model.coefficients.data() + r.outcome_model.coefficients.size());
  rep.diagnostics["iterations"] = r.outcome_model.iterations;
  rep.diagnostics["deviance"] = r.outcome_model.deviance;
  return rep;
}

}  // namespace extctrl
