#include "extctrl/analysis.hpp"

#include <sstream>

#include "extctrl/error.hpp"
#include "extctrl/json_format.hpp"

namespace extctrl {

namespace {

nlohmann::json bootstrap_json(const BootstrapConfig& c) {
  return {{"replicates", c.replicates},
          {"level", c.level},
          {"seed", c.seed},
          {"resampling", to_string(c.resampling)},
          {"interval", "percentile"}};
}

void attach_ci(EffectReport& r, const BootstrapResult& b, const BootstrapConfig& c) {
  r.ci = ConfidenceInterval{b.lower, b.upper, b.level, b.replicates, b.failures};
  r.diagnostics["bootstrap"] = {{"refits", b.refits},
                                {"failures", b.failures},
                                {"failure_fraction", b.failure_fraction},
                                {"replicate_median", b.median},
                                {"seed", c.seed},
                                {"resampling", to_string(c.resampling)}};
  if (c.resampling == Resampling::TrialOnly)
    r.warnings.push_back(
        "bootstrap resamples trial subjects only; interval coverage for unanchored comparisons can fall short of "
        "the nominal level");
}

nlohmann::json estimand_step(const std::string& name, const std::string& population) {
  return {{"step", "estimand"}, {"estimand", name}, {"target_population", population}};
}

}  // namespace

// ---------------------------------------------------------------------------
// Weighting

namespace {

EffectReport weighting_contrast(const Dataset& data, const WeightSet& ws, const WeightingOptions& o,
                                std::optional<SurvivalCurve>* trial_curve = nullptr,
                                std::optional<SurvivalCurve>* external_curve = nullptr) {
  if (data.outcome_kind() != OutcomeKind::TimeToEvent) return weighted_mean_contrast(data, ws, o.scale);
  if (!o.horizon) throw Error(ErrorCode::PlanInvalid, "time-to-event comparisons need a horizon");
  check_scale(data.outcome_kind(), o.scale);
  auto ct = weighted_km(data, ws.weights, Group::Trial);
  auto ce = weighted_km(data, ws.weights, Group::External);
  EffectReport r = survival_contrast(ct, ce, *o.horizon);
  r.method = "weighting";
  r.estimand = ws.estimand.name();
  r.target_population = ws.estimand.target_population_label();
  r.ess_trial = ws.ess_trial;
  r.ess_external = ws.ess_external;
  if (ws.estimand.kind() == EstimandKind::Trimmed)
    r.warnings.push_back("trimming changes the target population; the estimand is non-specified");
  if (trial_curve) *trial_curve = std::move(ct);
  if (external_curve) *external_curve = std::move(ce);
  return r;
}

}  // namespace

double weighting_estimate(const Dataset& data, const WeightingOptions& options) {
  const auto model = estimate_propensity(data, options.covariates, options.glm);
  const auto ws = balancing_weights(model, data, options.estimand);
  return weighting_contrast(data, ws, options).estimate;
}

WeightingResult run_weighting(const Dataset& data, const WeightingOptions& o) {
  if (!data.has_external()) throw Error(ErrorCode::EmptyDataset, "weighting needs external individual-level data");
  if (o.covariates.empty()) throw Error(ErrorCode::PlanInvalid, "weighting needs a covariate list");

  WeightingResult res;
  res.model = estimate_propensity(data, o.covariates, o.glm);
  res.positivity = positivity_report(res.model, data, o.positivity_band);
  if (o.fail_on_overlap && res.positivity.insufficient_overlap)
    throw Error(ErrorCode::PositivityHardFail, "propensity score overlap is insufficient");
  res.weights = balancing_weights(res.model, data, o.estimand);
  res.balance = balance_table(data, res.weights, o.balance_threshold, o.covariates);
  res.report = weighting_contrast(data, res.weights, o, &res.curve_trial, &res.curve_external);

  if (o.bootstrap) {
    const auto b = bootstrap_ci(data, [&](const Dataset& d) { return weighting_estimate(d, o); }, *o.bootstrap);
    attach_ci(res.report, b, *o.bootstrap);
  }

  const auto checklist = comparability_checklist(o.checklist);
  res.report.diagnostics["positivity"] = to_json(res.positivity);
  res.report.diagnostics["balance"] = to_json(res.balance);
  res.report.diagnostics["checklist"] = to_json(checklist);
  res.report.diagnostics["propensity_model"] = {
      {"covariates", res.model.covariate_names},
      {"dropped_constant", res.model.dropped_constant},
      {"coefficients", std::vector<double>(res.model.glm.coefficients.data(),
                                           res.model.glm.coefficients.data() + res.model.glm.coefficients.size())},
      {"iterations", res.model.glm.iterations},
      {"deviance", res.model.glm.deviance}};
  if (res.positivity.insufficient_overlap)
    res.report.warnings.push_back("insufficient propensity score overlap; estimates rely on extrapolation");
  if (res.balance.imbalance)
    res.report.warnings.push_back("weighted standardized mean difference exceeds " +
                                  format_double(o.balance_threshold));
  if (checklist.status != ChecklistStatus::Pass)
    res.report.warnings.push_back("comparability checklist status " + to_string(checklist.status));

  nlohmann::json steps = nlohmann::json::array();
  steps.push_back(estimand_step(res.weights.estimand.name(), res.weights.estimand.target_population_label()));
  steps.push_back({{"step", "selection_diagnostics"},
                   {"propensity", "logistic regression"},
                   {"positivity_band", o.positivity_band},
                   {"balance_threshold", o.balance_threshold},
                   {"checklist_status", to_string(checklist.status)}});
  steps.push_back({{"step", "comparison"}, {"method", "weighting"}, {"scale", to_string(o.scale)}});
  auto& p = res.report.provenance;
  p["steps"] = steps;
  p["covariates"] = o.covariates;
  p["estimand"] = o.estimand.spec();
  p["scale"] = to_string(o.scale);
  p["trim"] = o.estimand.kind() == EstimandKind::Trimmed ? nlohmann::json(o.estimand.trim_threshold())
                                                         : nlohmann::json(nullptr);
  p["horizon"] = o.horizon ? nlohmann::json(*o.horizon) : nlohmann::json(nullptr);
  p["bootstrap"] = o.bootstrap ? bootstrap_json(*o.bootstrap) : nlohmann::json(nullptr);
  p["seed"] = o.bootstrap ? nlohmann::json(o.bootstrap->seed) : nlohmann::json(nullptr);
  return res;
}

// ---------------------------------------------------------------------------
// MAIC

MaicResult run_maic(const Dataset& data, const AggregateSummary& target, const MaicAnalysisOptions& o) {
  MaicResult res{.fit = {}, .trial = data.has_external() ? data.subset(Group::Trial) : data, .report = {}};
  res.fit = maic_weights(res.trial, target, o.covariates, o.maic);
  res.report = maic_compare(res.fit, res.trial, target, o.scale, o.compare);

  if (o.bootstrap) {
    BootstrapConfig cfg = *o.bootstrap;
    cfg.resampling = Resampling::TrialOnly;
    const auto b = bootstrap_ci(
        res.trial,
        [&](const Dataset& d) {
          const auto fit = maic_weights(d, target, o.covariates, o.maic);
          return maic_compare(fit, d, target, o.scale, o.compare).estimate;
        },
        cfg);
    attach_ci(res.report, b, cfg);
  }

  const auto checklist = comparability_checklist(o.checklist);
  res.report.diagnostics["checklist"] = to_json(checklist);
  if (checklist.status != ChecklistStatus::Pass)
    res.report.warnings.push_back("comparability checklist status " + to_string(checklist.status));

  nlohmann::json steps = nlohmann::json::array();
  steps.push_back(estimand_step("ATC", res.report.target_population));
  steps.push_back({{"step", "selection_diagnostics"},
                   {"moment_matching", o.maic.match_variance ? "means and variances" : "means"},
                   {"ess", res.fit.ess},
                   {"checklist_status", to_string(checklist.status)}});
  steps.push_back({{"step", "comparison"}, {"method", "maic"}, {"scale", to_string(o.scale)}});
  auto& p = res.report.provenance;
  p["steps"] = steps;
  p["covariates"] = o.covariates;
  p["estimand"] = "atc";
  p["scale"] = to_string(o.scale);
  p["continuity_correction"] = o.compare.continuity_correction;
  p["bootstrap"] = o.bootstrap ? bootstrap_json(BootstrapConfig{o.bootstrap->replicates, o.bootstrap->level,
                                                                o.bootstrap->seed, Resampling::TrialOnly})
                               : nlohmann::json(nullptr);
  p["seed"] = o.bootstrap ? nlohmann::json(o.bootstrap->seed) : nlohmann::json(nullptr);
  return res;
}

// ---------------------------------------------------------------------------
// STC

StcAnalysisResult run_stc(const Dataset& data, const AggregateSummary& target, const StcAnalysisOptions& o) {
  StcAnalysisResult res;
  res.stc = stc_estimate(data, target, o.covariates, o.link, o.scale, o.glm);
  res.report = to_report(res.stc);

  if (o.bootstrap) {
    BootstrapConfig cfg = *o.bootstrap;
    cfg.resampling = Resampling::TrialOnly;
    const Dataset trial = data.has_external() ? data.subset(Group::Trial) : data;
    const auto b = bootstrap_ci(
        trial, [&](const Dataset& d) { return stc_estimate(d, target, o.covariates, o.link, o.scale, o.glm).effect; },
        cfg);
    attach_ci(res.report, b, cfg);
  }

  const auto checklist = comparability_checklist(o.checklist);
  res.report.diagnostics["checklist"] = to_json(checklist);
  if (checklist.status != ChecklistStatus::Pass)
    res.report.warnings.push_back("comparability checklist status " + to_string(checklist.status));

  nlohmann::json steps = nlohmann::json::array();
  steps.push_back(estimand_step("ATC", res.report.target_population));
  steps.push_back({{"step", "selection_diagnostics"},
                   {"outcome_model", to_string(o.link) == "logit" ? "logistic regression" : "linear regression"},
                   {"checklist_status", to_string(checklist.status)}});
  steps.push_back({{"step", "comparison"}, {"method", "stc"}, {"scale", to_string(o.scale)}});
  auto& p = res.report.provenance;
  p["steps"] = steps;
  p["covariates"] = o.covariates;
  p["estimand"] = "atc";
  p["scale"] = to_string(o.scale);
  p["link"] = to_string(o.link);
  p["bootstrap"] = o.bootstrap ? bootstrap_json(BootstrapConfig{o.bootstrap->replicates, o.bootstrap->level,
                                                                o.bootstrap->seed, Resampling::TrialOnly})
                               : nlohmann::json(nullptr);
  p["seed"] = o.bootstrap ? nlohmann::json(o.bootstrap->seed) : nlohmann::json(nullptr);
  return res;
}

// ---------------------------------------------------------------------------
// Power prior

BinomialCounts count_responders(const Dataset& data, Group group) {
  if (data.outcome_kind() != OutcomeKind::Binary)
    throw Error(ErrorCode::ScaleIncompatibleWithOutcome, "power prior borrowing needs a binary outcome");
  BinomialCounts c;
  for (const auto& r : data.records()) {
    if (r.group != group) continue;
    if (!r.outcome) throw Error(ErrorCode::MissingValue, "subject '" + r.id + "' has no outcome");
    ++c.n;
    if (*r.outcome == 1.0) ++c.responders;
  }
  return c;
}

nlohmann::json run_power_prior(BinomialCounts trial, BinomialCounts external, const PowerPriorOptions& o) {
  if (!o.assume_comparable)
    throw Error(ErrorCode::PlanInvalid,
                "power prior borrowing applies only when the populations are assumed comparable "
                "(--assume-comparable)");
  const auto post = power_prior_posterior(trial, external, o.a0, o.prior_alpha, o.prior_beta);
  nlohmann::json j = to_json(post, summarize(post, o.level));
  j["method"] = "power_prior";
  j["trial"] = {{"responders", trial.responders}, {"n", trial.n}};
  j["external"] = {{"responders", external.responders}, {"n", external.n}};
  j["assume_comparable"] = true;
  if (!o.sweep.empty()) {
    nlohmann::json sweep = nlohmann::json::array();
    for (const auto& pt : power_prior_sweep(trial, external, o.sweep, o.prior_alpha, o.prior_beta, o.level))
      sweep.push_back(to_json(pt.posterior, pt.summary));
    j["sensitivity"] = sweep;
  }
  j["warnings"] = {"a0 is fixed by the analyst; no data-driven selection of the discount is performed"};
  return j;
}

std::string weights_to_csv(const Dataset& data, std::span<const double> scores, std::span<const double> weights) {
  std::ostringstream out;
  out << "id,group,score,weight\n";
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& r = data.records()[i];
    out << r.id << ',' << to_string(r.group) << ',' << (scores.empty() ? "NA" : format_double(scores[i])) << ','
        << format_double(weights[i]) << '\n';
  }
  return out.str();
}

}  // namespace extctrl
