#include "extctrl/estimators.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "extctrl/error.hpp"
#include "extctrl/json_format.hpp"

namespace extctrl {

nlohmann::json to_json(const EffectReport& r) {
  nlohmann::json j;
  j["method"] = r.method;
  j["estimand"] = {{"name", r.estimand}, {"target_population", r.target_population}};
  j["scale"] = to_string(r.scale);
  j["scale_label"] = scale_label(r.scale);
  if (r.status == ContrastStatus::Finite)
    j["estimate"] = r.estimate;
  else if (r.status == ContrastStatus::Infinite)
    j["estimate"] = "inf";
  else
    j["estimate"] = nullptr;
  j["status"] = to_string(r.status);
  if (r.ci) {
    j["ci"] = {{"lower", r.ci->lower},     {"upper", r.ci->upper},       {"level", r.ci->level},
               {"method", "percentile"},    {"replicates", r.ci->replicates}, {"failures", r.ci->failures}};
  } else {
    j["ci"] = nullptr;
  }
  j["group_summaries"] = {{"trial", r.trial_value}, {"external", r.external_value}};
  j["ess"] = {{"trial", r.ess_trial ? nlohmann::json(*r.ess_trial) : nlohmann::json(nullptr)},
              {"external", r.ess_external ? nlohmann::json(*r.ess_external) : nlohmann::json(nullptr)}};
  j["warnings"] = r.warnings;
  j["diagnostics"] = r.diagnostics;
  j["provenance"] = r.provenance;
  return j;
}

std::pair<double, double> weighted_outcome_means(const Dataset& data, std::span<const double> weights) {
  if (weights.size() != data.size())
    throw Error(ErrorCode::SchemaViolation, "weights are not aligned with the dataset");
  double num[2] = {0.0, 0.0}, den[2] = {0.0, 0.0};
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& r = data.records()[i];
    if (!r.outcome) throw Error(ErrorCode::MissingValue, "subject '" + r.id + "' has no outcome");
    const int g = r.is_trial() ? 0 : 1;
    num[g] += weights[i] * *r.outcome;
    den[g] += weights[i];
  }
  if (!(den[0] > 0.0)) throw Error(ErrorCode::AllWeightsZero, "trial group carries no weight");
  if (!(den[1] > 0.0)) throw Error(ErrorCode::AllWeightsZero, "external group carries no weight");
  return {num[0] / den[0], num[1] / den[1]};
}

EffectReport weighted_mean_contrast(const Dataset& data, const WeightSet& weights, Scale scale) {
  if (data.outcome_kind() == OutcomeKind::TimeToEvent)
    throw Error(ErrorCode::ScaleIncompatibleWithOutcome, "use survival_contrast for time-to-event outcomes");
  check_scale(data.outcome_kind(), scale);
  const auto [m1, m0] = weighted_outcome_means(data, weights.weights);
  const auto c = contrast(m1, m0, scale);
  if (!c.finite())
    throw Error(ErrorCode::ZeroDenominator, scale_label(scale) + " has a zero baseline (" + to_string(c.status) + ")");

  EffectReport r;
  r.method = "weighting";
  r.estimand = weights.estimand.name();
  r.target_population = weights.estimand.target_population_label();
  r.scale = scale;
  r.estimate = c.value;
  r.status = c.status;
  r.trial_value = m1;
  r.external_value = m0;
  r.ess_trial = weights.ess_trial;
  r.ess_external = weights.ess_external;
  if (weights.estimand.kind() == EstimandKind::Trimmed)
    r.warnings.push_back("trimming changes the target population; the estimand is non-specified");
  return r;
}

// ---------------------------------------------------------------------------

double SurvivalCurve::survival_at(double t) const {
  // last event time <= t
  auto it = std::upper_bound(time.begin(), time.end(), t);
  if (it == time.begin()) return 1.0;
  return survival[static_cast<std::size_t>(it - time.begin()) - 1];
}

std::optional<double> SurvivalCurve::median() const {
  for (std::size_t k = 0; k < time.size(); ++k)
    if (survival[k] <= 0.5) return time[k];
  return std::nullopt;
}

SurvivalCurve weighted_km(std::span<const double> time, std::span<const int> event, std::span<const double> weights) {
  const std::size_t n = time.size();
  if (event.size() != n || weights.size() != n)
    throw Error(ErrorCode::SchemaViolation, "time, event and weight vectors differ in length");
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(time[i] >= 0.0)) throw Error(ErrorCode::InvalidOutcome, "negative or missing time");
    if (!(weights[i] >= 0.0)) throw Error(ErrorCode::InvalidOutcome, "negative weight");
    total += weights[i];
  }
  if (!(total > 0.0)) throw Error(ErrorCode::AllWeightsZero, "no positive weight in survival data");

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return time[a] < time[b]; });

  SurvivalCurve c;
  c.last_time = n ? time[order.back()] : 0.0;
  double s = 1.0;
  double remaining = total;
  std::size_t i = 0;
  while (i < n) {
    const double t = time[order[i]];
    double d = 0.0, leaving = 0.0;
    std::size_t j = i;
    for (; j < n && time[order[j]] == t; ++j) {
      const double w = weights[order[j]];
      if (event[order[j]]) d += w;
      leaving += w;
    }
    if (d > 0.0) {
      s *= 1.0 - d / remaining;
      c.time.push_back(t);
      c.survival.push_back(s);
      c.at_risk.push_back(remaining);
      c.events.push_back(d);
    }
    remaining -= leaving;
    i = j;
  }
  return c;
}

SurvivalCurve weighted_km(const Dataset& data, std::span<const double> weights, Group group) {
  if (weights.size() != data.size())
    throw Error(ErrorCode::SchemaViolation, "weights are not aligned with the dataset");
  std::vector<double> t, w;
  std::vector<int> e;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& r = data.records()[i];
    if (r.group != group) continue;
    if (!r.time) throw Error(ErrorCode::MissingValue, "subject '" + r.id + "' has no follow-up time");
    t.push_back(*r.time);
    e.push_back(*r.event ? 1 : 0);
    w.push_back(weights[i]);
  }
  return weighted_km(t, e, w);
}

namespace {
nlohmann::json median_json(const SurvivalCurve& c) {
  auto m = c.median();
  return m ? nlohmann::json(*m) : nlohmann::json("not reached");
}
}  // namespace

EffectReport survival_contrast(const SurvivalCurve& trial, const SurvivalCurve& external, double horizon) {
  if (!(horizon >= 0.0)) throw Error(ErrorCode::ParameterOutOfRange, "horizon must be nonnegative");
  EffectReport r;
  r.method = "survival";
  r.scale = Scale::SurvivalDifference;
  r.trial_value = trial.survival_at(horizon);
  r.external_value = external.survival_at(horizon);
  r.estimate = r.trial_value - r.external_value;
  const bool beyond = horizon > trial.last_time || horizon > external.last_time;
  r.diagnostics["horizon"] = horizon;
  r.diagnostics["horizon_beyond_follow_up"] = beyond;
  r.diagnostics["median_survival"] = {{"trial", median_json(trial)}, {"external", median_json(external)}};
  if (beyond)
    r.warnings.push_back("horizon lies beyond the last observed time; curves are evaluated at their last value");
  return r;
}

nlohmann::json to_json(const SurvivalCurve& c) {
  nlohmann::json pts = nlohmann::json::array();
  for (std::size_t k = 0; k < c.time.size(); ++k)
    pts.push_back({{"time", c.time[k]}, {"survival", c.survival[k]}, {"at_risk", c.at_risk[k]}});
  return {{"points", pts}, {"last_time", c.last_time}, {"median", median_json(c)}};
}

std::string curve_to_csv(const SurvivalCurve& c) {
  std::ostringstream out;
  out << "time,survival,at_risk\n";
  for (std::size_t k = 0; k < c.time.size(); ++k)
    out << format_double(c.time[k]) << ',' << format_double(c.survival[k]) << ',' << format_double(c.at_risk[k])
        << '\n';
  return out.str();
}

}  // namespace extctrl
