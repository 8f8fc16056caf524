#include "extctrl/balancing.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>

#include "extctrl/error.hpp"
#include "extctrl/json_format.hpp"

namespace extctrl {

Estimand Estimand::trimmed(double a) {
  if (!(a > 0.0 && a < 0.5))
    throw Error(ErrorCode::ParameterOutOfRange, "trimming threshold must lie in (0, 0.5)");
  return Estimand(EstimandKind::Trimmed, a);
}

Estimand Estimand::parse(const std::string& text) {
  std::string s = text;
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  if (s == "ate" || s == "ipw") return ate();
  if (s == "att") return att();
  if (s == "atc") return atc();
  if (s == "ato" || s == "overlap") return ato();
  if (s == "matching") return matching();
  if (s.rfind("trim:", 0) == 0) {
    const std::string num = s.substr(5);
    double a = 0.0;
    auto [ptr, ec] = std::from_chars(num.data(), num.data() + num.size(), a);
    if (ec != std::errc{} || ptr != num.data() + num.size())
      throw Error(ErrorCode::ParameterOutOfRange, "bad trimming threshold '" + num + "'");
    return trimmed(a);
  }
  throw Error(ErrorCode::PlanInvalid, "unknown estimand '" + text + "'");
}

std::string Estimand::name() const {
  switch (kind_) {
    case EstimandKind::ATE: return "ATE";
    case EstimandKind::ATT: return "ATT";
    case EstimandKind::ATC: return "ATC";
    case EstimandKind::ATO: return "ATO";
    case EstimandKind::Trimmed: return "trimmed";
    case EstimandKind::Matching: return "matching";
  }
  return "";
}

std::string Estimand::spec() const {
  switch (kind_) {
    case EstimandKind::ATE: return "ate";
    case EstimandKind::ATT: return "att";
    case EstimandKind::ATC: return "atc";
    case EstimandKind::ATO: return "ato";
    case EstimandKind::Trimmed: return "trim:" + format_double(trim_);
    case EstimandKind::Matching: return "matching";
  }
  return "";
}

std::string Estimand::target_population_label() const {
  switch (kind_) {
    case EstimandKind::ATE: return "combined trial and external population";
    case EstimandKind::ATT: return "trial (treated) population";
    case EstimandKind::ATC: return "external control population";
    case EstimandKind::ATO: return "overlap population";
    case EstimandKind::Trimmed: return "trimmed-population (non-specified)";
    case EstimandKind::Matching: return "matching population";
  }
  return "";
}

double tilting(const Estimand& estimand, double e) {
  switch (estimand.kind()) {
    case EstimandKind::ATE: return 1.0;
    case EstimandKind::ATT: return e;
    case EstimandKind::ATC: return 1.0 - e;
    case EstimandKind::ATO: return e * (1.0 - e);
    case EstimandKind::Trimmed: {
      const double a = estimand.trim_threshold();
      return (a < e && e < 1.0 - a) ? 1.0 : 0.0;
    }
    case EstimandKind::Matching: return std::min(e, 1.0 - e);
  }
  return 0.0;
}

double balancing_weight(const Estimand& estimand, double e, Group group) {
  const double h = tilting(estimand, e);
  return group == Group::Trial ? h / e : h / (1.0 - e);
}

double effective_sample_size(std::span<const double> weights) {
  double s = 0.0, s2 = 0.0;
  for (double w : weights) {
    s += w;
    s2 += w * w;
  }
  return s2 > 0.0 ? s * s / s2 : 0.0;
}

void refresh_summaries(WeightSet& ws, const Dataset& data) {
  std::vector<double> wt, we;
  ws.n_zero_weight = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double w = ws.weights[i];
    if (w == 0.0) ++ws.n_zero_weight;
    (data.records()[i].is_trial() ? wt : we).push_back(w);
  }
  ws.ess_trial = effective_sample_size(wt);
  ws.ess_external = effective_sample_size(we);
}

WeightSet balancing_weights(std::span<const double> scores, const Dataset& data, const Estimand& estimand) {
  if (scores.size() != data.size())
    throw Error(ErrorCode::SchemaViolation, "scores are not aligned with the dataset");
  WeightSet ws;
  ws.estimand = estimand;
  ws.weights.resize(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double e = scores[i];
    if (!(e > 0.0 && e < 1.0))
      throw Error(ErrorCode::DegenerateScores, "score outside (0,1) for subject '" + data.records()[i].id + "'");
    ws.weights[i] = balancing_weight(estimand, e, data.records()[i].group);
  }
  refresh_summaries(ws, data);
  return ws;
}

WeightSet balancing_weights(const PropensityModel& model, const Dataset& data, const Estimand& estimand) {
  return balancing_weights(model.scores, data, estimand);
}

WeightSet unit_weights(const Dataset& data) {
  WeightSet ws;
  ws.estimand = Estimand::ate();
  ws.weights.assign(data.size(), 1.0);
  refresh_summaries(ws, data);
  return ws;
}

std::pair<double, double> weighted_prevalence(const WeightSet& weights, const Dataset& data,
                                              const std::string& covariate) {
  const std::size_t j = data.covariate_index(covariate);
  double num[2] = {0.0, 0.0}, den[2] = {0.0, 0.0};
  for (std::size_t i = 0; i < data.size(); ++i) {
    const auto& r = data.records()[i];
    const int g = r.is_trial() ? 0 : 1;
    num[g] += weights.weights[i] * r.covariates[j];
    den[g] += weights.weights[i];
  }
  if (den[0] <= 0.0) throw Error(ErrorCode::AllWeightsZero, "trial group carries no weight");
  if (den[1] <= 0.0) throw Error(ErrorCode::AllWeightsZero, "external group carries no weight");
  return {num[0] / den[0], num[1] / den[1]};
}

}  // namespace extctrl
