#include "extctrl/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <random>

#include "extctrl/error.hpp"
#include "extctrl/glm.hpp"
#include "extctrl/inference.hpp"

namespace extctrl {

namespace {

// Stream indices reserved for the oracle, far from replicate indices.
constexpr std::uint64_t kTruthStream = 0xA11CE5ULL << 32;
constexpr std::uint64_t kCensoringStream = 0xCE115ULL << 32;
constexpr int kCensoringDraws = 20000;
constexpr int kMaxEnumeratedBinary = 20;

void validate(const ScenarioConfig& c) {
  auto fail = [](const std::string& m) { throw Error(ErrorCode::InvalidConfig, m); };
  if (c.n_trial <= 0 || c.n_external <= 0) fail("group sizes must be positive");
  const std::size_t k = c.covariates.size();
  if (c.assignment_coefficients.size() != k) fail("assignment coefficients must match the covariate count");
  if (c.outcome_coefficients.size() != k) fail("outcome coefficients must match the covariate count");
  for (const auto& cov : c.covariates) {
    if (cov.name.empty()) fail("covariate without a name");
    if (cov.type == CovariateType::Binary && !(cov.p > 0.0 && cov.p < 1.0))
      fail("binary covariate '" + cov.name + "' needs p in (0,1)");
    if (cov.type == CovariateType::Continuous && !(cov.sd > 0.0))
      fail("continuous covariate '" + cov.name + "' needs sd > 0");
  }
  if (!(c.censoring_rate >= 0.0 && c.censoring_rate < 1.0)) fail("censoring rate must lie in [0,1)");
  if (!(c.noise_sd >= 0.0)) fail("noise sd must be nonnegative");
  if (!(c.time_lag >= 0.0)) fail("time lag must be nonnegative");
  if (!(c.horizon >= 0.0)) fail("horizon must be nonnegative");
  if (c.truth_draws < 1000) fail("truth_draws must be at least 1000");
  if (c.outcome_kind == OutcomeKind::Binary && !(c.effect >= -1.0 && c.effect <= 1.0))
    fail("binary effect is a risk difference and must lie in [-1, 1]");
}

bool enumerable(const ScenarioConfig& c) {
  return c.covariates.size() <= kMaxEnumeratedBinary &&
         std::all_of(c.covariates.begin(), c.covariates.end(),
                     [](const CovariateSpec& s) { return s.type == CovariateType::Binary; });
}

double draw_covariate(const CovariateSpec& s, std::mt19937_64& rng) {
  if (s.type == CovariateType::Binary) {
    std::bernoulli_distribution b(s.p);
    return b(rng) ? 1.0 : 0.0;
  }
  std::normal_distribution<double> nd(s.mean, s.sd);
  return nd(rng);
}

/// Calls fn(x, probability) over the covariate support: every cell when all
/// covariates are binary, otherwise `draws` Monte-Carlo points of mass 1/draws.
void for_each_support_point(const ScenarioConfig& c, int draws, std::uint64_t stream,
                            const std::function<void(const std::vector<double>&, double)>& fn) {
  const std::size_t k = c.covariates.size();
  std::vector<double> x(k);
  if (enumerable(c)) {
    const std::uint64_t cells = std::uint64_t{1} << k;
    for (std::uint64_t m = 0; m < cells; ++m) {
      double prob = 1.0;
      for (std::size_t j = 0; j < k; ++j) {
        x[j] = (m >> j) & 1U ? 1.0 : 0.0;
        prob *= x[j] == 1.0 ? c.covariates[j].p : 1.0 - c.covariates[j].p;
      }
      fn(x, prob);
    }
    return;
  }
  std::mt19937_64 rng(substream_seed(c.seed, stream));
  const double mass = 1.0 / draws;
  for (int d = 0; d < draws; ++d) {
    for (std::size_t j = 0; j < k; ++j) x[j] = draw_covariate(c.covariates[j], rng);
    fn(x, mass);
  }
}

double linear(double intercept, const std::vector<double>& coef, const std::vector<double>& x) {
  double eta = intercept;
  for (std::size_t j = 0; j < x.size(); ++j) eta += coef[j] * x[j];
  return eta;
}

double outcome_mean(const ScenarioConfig& c, const std::vector<double>& x, int t) {
  const double eta = linear(c.outcome_intercept, c.outcome_coefficients, x);
  switch (c.outcome_kind) {
    case OutcomeKind::Binary: return std::clamp(expit(eta) + c.effect * t, 0.0, 1.0);
    case OutcomeKind::Continuous: return eta + c.effect * t;
    case OutcomeKind::TimeToEvent: return std::exp(-std::exp(eta + c.effect * t) * c.horizon);
  }
  return 0.0;
}

double hazard(const ScenarioConfig& c, const std::vector<double>& x, int t) {
  return std::exp(linear(c.outcome_intercept, c.outcome_coefficients, x) + c.effect * t);
}

Scale truth_scale(OutcomeKind k) {
  switch (k) {
    case OutcomeKind::Binary: return Scale::RiskDifference;
    case OutcomeKind::Continuous: return Scale::MeanDifference;
    case OutcomeKind::TimeToEvent: return Scale::SurvivalDifference;
  }
  return Scale::RiskDifference;
}

double trial_share(const ScenarioConfig& c) {
  return static_cast<double>(c.n_trial) / static_cast<double>(c.n_trial + c.n_external);
}

// (1 - exp(-lambda C)) / (lambda C): Pr(C < T) for T ~ Exp(lambda), C ~ U(0, C).
double censored_share(double lambda, double cmax) {
  const double z = lambda * cmax;
  if (z < 1e-8) return 1.0 - 0.5 * z;
  return -std::expm1(-z) / z;
}

double calibrate_censoring(const ScenarioConfig& c, const TruthRecord& truth) {
  if (c.censoring_rate <= 0.0) return std::numeric_limits<double>::infinity();
  const double pi = trial_share(c);
  const double p1 = truth.marginal_trial_probability;
  struct Point {
    double mass_trial, mass_external, lambda_trial, lambda_external;
  };
  std::vector<Point> pts;
  for_each_support_point(c, kCensoringDraws, kCensoringStream, [&](const std::vector<double>& x, double prob) {
    const double e = expit(linear(c.assignment_intercept, c.assignment_coefficients, x));
    pts.push_back({pi * prob * e / p1, (1.0 - pi) * prob * (1.0 - e) / (1.0 - p1), hazard(c, x, 1), hazard(c, x, 0)});
  });
  auto rate = [&](double cmax) {
    double s = 0.0, m = 0.0;
    for (const auto& p : pts) {
      s += p.mass_trial * censored_share(p.lambda_trial, cmax) + p.mass_external * censored_share(p.lambda_external, cmax);
      m += p.mass_trial + p.mass_external;
    }
    return s / m;
  };
  // rate() decreases from 1 to 0 as cmax grows; bisect on log scale
  double lo = std::log(1e-12), hi = std::log(1e12);
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (rate(std::exp(mid)) > c.censoring_rate)
      lo = mid;
    else
      hi = mid;
  }
  return std::exp(0.5 * (lo + hi));
}

}  // namespace

const TruthValue& TruthRecord::value_for(EstimandKind kind) const {
  switch (kind) {
    case EstimandKind::ATE: return ate;
    case EstimandKind::ATT: return att;
    case EstimandKind::ATC: return atc;
    default: throw Error(ErrorCode::EstimandMismatch, "truth is recorded for ATE, ATT and ATC only");
  }
}

TruthRecord compute_truth(const ScenarioConfig& c) {
  validate(c);
  const bool exact = enumerable(c);

  // first pass: marginal Pr(Trial)
  double p1 = 0.0;
  for_each_support_point(c, exact ? 0 : c.truth_draws, kTruthStream, [&](const std::vector<double>& x, double prob) {
    p1 += prob * expit(linear(c.assignment_intercept, c.assignment_coefficients, x));
  });

  // second pass: tilted averages of the cell-level effect
  double sw_t = 0.0, swt_t = 0.0, sw_c = 0.0, swt_c = 0.0;
  std::vector<double> tau_draws, e_draws;
  if (!exact) {
    tau_draws.reserve(static_cast<std::size_t>(c.truth_draws));
    e_draws.reserve(static_cast<std::size_t>(c.truth_draws));
  }
  for_each_support_point(c, exact ? 0 : c.truth_draws, kTruthStream, [&](const std::vector<double>& x, double prob) {
    const double e = expit(linear(c.assignment_intercept, c.assignment_coefficients, x));
    const double tau = outcome_mean(c, x, 1) - outcome_mean(c, x, 0);
    sw_t += prob * e;
    swt_t += prob * e * tau;
    sw_c += prob * (1.0 - e);
    swt_c += prob * (1.0 - e) * tau;
    if (!exact) {
      tau_draws.push_back(tau);
      e_draws.push_back(e);
    }
  });

  TruthRecord t;
  t.exact = exact;
  t.scale = truth_scale(c.outcome_kind);
  t.marginal_trial_probability = p1;
  const double pi = trial_share(c);
  t.score_offset = logit(pi) - logit(p1);
  t.att = {EstimandKind::ATT, t.scale, swt_t / sw_t, 0.0};
  t.atc = {EstimandKind::ATC, t.scale, swt_c / sw_c, 0.0};
  t.ate = {EstimandKind::ATE, t.scale, pi * t.att.value + (1.0 - pi) * t.atc.value, 0.0};
  if (!exact) {
    // ratio-estimator standard errors; sums below are over draws with mass 1/N
    double vt = 0.0, vc = 0.0, st = 0.0, sc = 0.0;
    for (std::size_t i = 0; i < tau_draws.size(); ++i) {
      const double e = e_draws[i];
      vt += std::pow(e * (tau_draws[i] - t.att.value), 2);
      vc += std::pow((1.0 - e) * (tau_draws[i] - t.atc.value), 2);
      st += e;
      sc += 1.0 - e;
    }
    t.att.mc_se = std::sqrt(vt) / st;
    t.atc.mc_se = std::sqrt(vc) / sc;
    t.ate.mc_se = std::sqrt(pi * pi * t.att.mc_se * t.att.mc_se + (1 - pi) * (1 - pi) * t.atc.mc_se * t.atc.mc_se);
  }
  return t;
}

SimulatedData generate(const ScenarioConfig& c) { return generate(c, compute_truth(c)); }

SimulatedData generate(const ScenarioConfig& c, const TruthRecord& truth) {
  validate(c);
  const std::size_t k = c.covariates.size();
  const double cmax = c.outcome_kind == OutcomeKind::TimeToEvent ? calibrate_censoring(c, truth) : 0.0;

  std::mt19937_64 rng(c.seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  struct Draw {
    std::vector<double> x;
  };
  std::vector<Draw> trial, external;
  trial.reserve(static_cast<std::size_t>(c.n_trial));
  external.reserve(static_cast<std::size_t>(c.n_external));
  const std::uint64_t max_draws = 1000ULL * static_cast<std::uint64_t>(c.n_trial + c.n_external) + 1000000ULL;
  std::uint64_t draws = 0;
  while (trial.size() < static_cast<std::size_t>(c.n_trial) || external.size() < static_cast<std::size_t>(c.n_external)) {
    if (++draws > max_draws) throw Error(ErrorCode::InvalidConfig, "assignment model almost never fills a group");
    Draw d;
    d.x.resize(k);
    for (std::size_t j = 0; j < k; ++j) d.x[j] = draw_covariate(c.covariates[j], rng);
    const double e = expit(linear(c.assignment_intercept, c.assignment_coefficients, d.x));
    const bool is_trial = unif(rng) < e;
    if (is_trial && trial.size() < static_cast<std::size_t>(c.n_trial))
      trial.push_back(std::move(d));
    else if (!is_trial && external.size() < static_cast<std::size_t>(c.n_external))
      external.push_back(std::move(d));
  }

  std::vector<std::string> names;
  std::vector<std::size_t> visible;
  for (std::size_t j = 0; j < k; ++j) {
    if (!c.covariates[j].hidden) {
      names.push_back(c.covariates[j].name);
      visible.push_back(j);
    }
  }

  std::vector<PatientRecord> records;
  std::vector<double> scores;
  records.reserve(trial.size() + external.size());
  auto emit = [&](const std::vector<Draw>& group, int t) {
    for (std::size_t i = 0; i < group.size(); ++i) {
      const auto& x = group[i].x;
      PatientRecord r;
      char id[32];
      std::snprintf(id, sizeof id, "%c%05zu", t ? 'T' : 'E', i + 1);
      r.id = id;
      r.group = t ? Group::Trial : Group::External;
      for (std::size_t j : visible) r.covariates.push_back(x[j]);
      switch (c.outcome_kind) {
        case OutcomeKind::Binary:
          r.outcome = unif(rng) < outcome_mean(c, x, t) ? 1.0 : 0.0;
          break;
        case OutcomeKind::Continuous: {
          std::normal_distribution<double> noise(0.0, 1.0);
          r.outcome = outcome_mean(c, x, t) + c.noise_sd * noise(rng);
          break;
        }
        case OutcomeKind::TimeToEvent: {
          std::exponential_distribution<double> ev(hazard(c, x, t));
          const double event_time = ev(rng);
          const double cens = std::isfinite(cmax) ? unif(rng) * cmax : std::numeric_limits<double>::infinity();
          const bool event = event_time <= cens;
          r.time = std::min(event_time, cens) + (t ? 0.0 : c.time_lag);
          r.event = event;
          break;
        }
      }
      records.push_back(std::move(r));
      scores.push_back(expit(linear(c.assignment_intercept, c.assignment_coefficients, x) + truth.score_offset));
    }
  };
  emit(trial, 1);
  emit(external, 0);

  return {Dataset(std::move(names), std::move(records), c.outcome_kind), truth, std::move(scores)};
}

double truth_gap(const EffectReport& report, const TruthValue& truth) {
  const std::string expected = truth.estimand == EstimandKind::ATE   ? "ATE"
                               : truth.estimand == EstimandKind::ATT ? "ATT"
                                                                     : "ATC";
  if (report.estimand != expected)
    throw Error(ErrorCode::EstimandMismatch, "report targets " + report.estimand + " but truth is " + expected);
  if (report.scale != truth.scale)
    throw Error(ErrorCode::EstimandMismatch,
                "report scale " + to_string(report.scale) + " differs from truth scale " + to_string(truth.scale));
  return report.estimate - truth.value;
}

// ---------------------------------------------------------------------------
// JSON

namespace {

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    throw Error(ErrorCode::InvalidConfig, std::string("scenario field '") + key + "' has the wrong type");
  }
}

std::string kind_name(EstimandKind k) {
  switch (k) {
    case EstimandKind::ATE: return "ATE";
    case EstimandKind::ATT: return "ATT";
    case EstimandKind::ATC: return "ATC";
    default: return "other";
  }
}

nlohmann::json truth_value_json(const TruthValue& v) {
  return {{"estimand", kind_name(v.estimand)}, {"value", v.value}, {"mc_se", v.mc_se}};
}

}  // namespace

ScenarioConfig parse_scenario(const nlohmann::json& j) {
  if (!j.is_object()) throw Error(ErrorCode::InvalidConfig, "scenario must be a JSON object");
  ScenarioConfig c;
  c.n_trial = get_or(j, "n_trial", c.n_trial);
  c.n_external = get_or(j, "n_external", c.n_external);
  c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
  c.time_lag = get_or(j, "time_lag", c.time_lag);
  c.truth_draws = get_or(j, "truth_draws", c.truth_draws);
  if (j.contains("covariates")) {
    for (const auto& cj : j.at("covariates")) {
      CovariateSpec s;
      s.name = get_or<std::string>(cj, "name", "");
      const auto type = get_or<std::string>(cj, "type", "binary");
      if (type == "binary")
        s.type = CovariateType::Binary;
      else if (type == "continuous")
        s.type = CovariateType::Continuous;
      else
        throw Error(ErrorCode::InvalidConfig, "unknown covariate type '" + type + "'");
      s.p = get_or(cj, "p", s.p);
      s.mean = get_or(cj, "mean", s.mean);
      s.sd = get_or(cj, "sd", s.sd);
      s.hidden = get_or(cj, "hidden", false);
      c.covariates.push_back(s);
    }
  }
  if (j.contains("assignment")) {
    const auto& a = j.at("assignment");
    c.assignment_intercept = get_or(a, "intercept", 0.0);
    c.assignment_coefficients = get_or(a, "coefficients", std::vector<double>{});
  }
  if (j.contains("outcome")) {
    const auto& o = j.at("outcome");
    try {
      c.outcome_kind = parse_outcome_kind(get_or<std::string>(o, "kind", "binary"));
    } catch (const Error& e) {
      throw Error(ErrorCode::InvalidConfig, e.what());
    }
    c.outcome_intercept = get_or(o, "intercept", 0.0);
    c.outcome_coefficients = get_or(o, "coefficients", std::vector<double>{});
    c.effect = get_or(o, "effect", 0.0);
    c.noise_sd = get_or(o, "noise_sd", c.noise_sd);
    c.censoring_rate = get_or(o, "censoring_rate", 0.0);
    c.horizon = get_or(o, "horizon", c.horizon);
  }
  validate(c);
  return c;
}

nlohmann::json to_json(const ScenarioConfig& c) {
  nlohmann::json covs = nlohmann::json::array();
  for (const auto& s : c.covariates) {
    nlohmann::json cj{{"name", s.name}, {"type", s.type == CovariateType::Binary ? "binary" : "continuous"},
                      {"hidden", s.hidden}};
    if (s.type == CovariateType::Binary)
      cj["p"] = s.p;
    else
      cj["mean"] = s.mean, cj["sd"] = s.sd;
    covs.push_back(cj);
  }
  return {{"n_trial", c.n_trial},
          {"n_external", c.n_external},
          {"seed", c.seed},
          {"time_lag", c.time_lag},
          {"truth_draws", c.truth_draws},
          {"covariates", covs},
          {"assignment", {{"intercept", c.assignment_intercept}, {"coefficients", c.assignment_coefficients}}},
          {"outcome",
           {{"kind", to_string(c.outcome_kind)},
            {"intercept", c.outcome_intercept},
            {"coefficients", c.outcome_coefficients},
            {"effect", c.effect},
            {"noise_sd", c.noise_sd},
            {"censoring_rate", c.censoring_rate},
            {"horizon", c.horizon}}}};
}

nlohmann::json to_json(const TruthRecord& t) {
  return {{"scale", to_string(t.scale)},
          {"ATE", truth_value_json(t.ate)},
          {"ATT", truth_value_json(t.att)},
          {"ATC", truth_value_json(t.atc)},
          {"exact", t.exact},
          {"marginal_trial_probability", t.marginal_trial_probability},
          {"score_offset", t.score_offset}};
}

}  // namespace extctrl
