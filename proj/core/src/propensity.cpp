#include "extctrl/propensity.hpp"

#include <algorithm>
#include <limits>

#include "extctrl/error.hpp"

namespace extctrl {

PropensityModel estimate_propensity(const Dataset& data, const std::vector<std::string>& covariates,
                                    const GlmOptions& options) {
  if (!data.has_external()) throw Error(ErrorCode::EmptyDataset, "propensity model needs external records");
  const std::vector<std::string>& requested = covariates.empty() ? data.covariate_names() : covariates;

  PropensityModel model;
  for (const auto& name : requested) {
    const auto values = data.covariate(name);
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    if (*lo == *hi)
      model.dropped_constant.push_back(name);
    else
      model.covariate_names.push_back(name);
  }

  const Eigen::MatrixXd X = data.design_matrix(model.covariate_names);
  const Eigen::VectorXd t = data.trial_indicator();
  model.glm = fit_logistic(X, t, options);

  const Eigen::VectorXd p = model.glm.fitted(X);
  model.scores.assign(p.data(), p.data() + p.size());
  for (std::size_t i = 0; i < model.scores.size(); ++i) {
    const double e = model.scores[i];
    if (!(e > 0.0 && e < 1.0))
      throw Error(ErrorCode::DegenerateScores, "subject '" + data.records()[i].id + "' has score " +
                                                   std::to_string(e) + " at the boundary");
  }
  return model;
}

PositivityReport positivity_report(const PropensityModel& model, const Dataset& data, double band) {
  if (!(band >= 0.0 && band < 0.5))
    throw Error(ErrorCode::ParameterOutOfRange, "band must lie in [0, 0.5)");
  if (model.scores.size() != data.size())
    throw Error(ErrorCode::SchemaViolation, "scores are not aligned with the dataset");

  PositivityReport rep;
  rep.band = band;
  constexpr double inf = std::numeric_limits<double>::infinity();
  rep.trial.min = rep.external.min = inf;
  rep.trial.max = rep.external.max = -inf;
  for (std::size_t i = 0; i < data.size(); ++i) {
    const double e = model.scores[i];
    auto& g = data.records()[i].is_trial() ? rep.trial : rep.external;
    g.min = std::min(g.min, e);
    g.max = std::max(g.max, e);
    ++g.n;
    if (e <= band || e >= 1.0 - band) ++g.n_outside_band;
  }
  for (auto* g : {&rep.trial, &rep.external}) {
    g->prop_outside_band = g->n ? static_cast<double>(g->n_outside_band) / static_cast<double>(g->n) : 0.0;
  }
  rep.overlap_lower = std::max(rep.trial.min, rep.external.min);
  rep.overlap_upper = std::min(rep.trial.max, rep.external.max);
  rep.overlap_empty = rep.trial.n == 0 || rep.external.n == 0 || rep.overlap_lower > rep.overlap_upper;
  rep.insufficient_overlap = rep.overlap_empty || rep.trial.prop_outside_band > rep.max_outside_share ||
                             rep.external.prop_outside_band > rep.max_outside_share;
  return rep;
}

namespace {
nlohmann::json group_json(const GroupScoreRange& g) {
  return {{"min", g.min},
          {"max", g.max},
          {"n", g.n},
          {"n_outside_band", g.n_outside_band},
          {"prop_outside_band", g.prop_outside_band}};
}
}  // namespace

nlohmann::json to_json(const PositivityReport& r) {
  nlohmann::json j;
  j["trial"] = group_json(r.trial);
  j["external"] = group_json(r.external);
  j["overlap"] = r.overlap_empty ? nlohmann::json(nullptr)
                                 : nlohmann::json{{"lower", r.overlap_lower}, {"upper", r.overlap_upper}};
  j["band"] = r.band;
  j["max_outside_share"] = r.max_outside_share;
  j["insufficient_overlap"] = r.insufficient_overlap;
  return j;
}

}  // namespace extctrl
