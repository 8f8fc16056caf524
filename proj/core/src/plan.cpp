#include "extctrl/plan.hpp"

#include <fstream>
#include <set>

#include <openssl/evp.h>

#include "extctrl/json_format.hpp"

namespace extctrl {

std::string to_string(Method m) {
  switch (m) {
    case Method::Weighting: return "weighting";
    case Method::Maic: return "maic";
    case Method::Stc: return "stc";
    case Method::PowerPrior: return "power_prior";
  }
  return "";
}

std::string plan_hash(const nlohmann::json& plan) {
  const std::string text = dump_json(plan, -1);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_Digest(text.data(), text.size(), digest, &len, EVP_sha256(), nullptr);
  static constexpr char hex[] = "0123456789abcdef";
  std::string out;
  out.reserve(2 * len);
  for (unsigned int i = 0; i < len; ++i) {
    out += hex[digest[i] >> 4];
    out += hex[digest[i] & 0xF];
  }
  return out;
}

namespace {

[[noreturn]] void invalid(const std::string& msg) { throw Error(ErrorCode::PlanInvalid, msg); }

template <typename T>
T field(const nlohmann::json& j, const char* key, T fallback) {
  if (!j.contains(key) || j.at(key).is_null()) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    invalid(std::string("plan field '") + key + "' has the wrong type");
  }
}

Method parse_method(const std::string& s) {
  if (s == "weighting") return Method::Weighting;
  if (s == "maic") return Method::Maic;
  if (s == "stc") return Method::Stc;
  if (s == "power_prior" || s == "borrow") return Method::PowerPrior;
  invalid("unknown method '" + s + "'");
}

const std::set<std::string> kKnownFields{
    "data",       "aggregate",   "method",          "estimand",       "trim",
    "covariates", "scale",       "horizon",         "link",           "bootstrap",
    "checklist",  "positivity_band", "balance_threshold", "fail_on_overlap", "match_variance",
    "continuity_correction", "power_prior", "notes"};

}  // namespace

AnalysisPlan parse_plan(const nlohmann::json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) invalid("plan must be a JSON object");
  for (const auto& [key, _] : j.items())
    if (!kKnownFields.count(key)) invalid("unknown plan field '" + key + "'");

  AnalysisPlan p;
  p.canonical = j;
  p.hash = plan_hash(j);
  if (!j.contains("method")) invalid("plan needs a method");
  p.method = parse_method(field<std::string>(j, "method", ""));

  const auto data = field<std::string>(j, "data", "");
  if (data.empty()) invalid("plan needs a data file");
  p.data_path = base_dir / data;
  const auto aggregate = field<std::string>(j, "aggregate", "");
  if (!aggregate.empty()) p.aggregate_path = base_dir / aggregate;

  p.covariates = field(j, "covariates", std::vector<std::string>{});
  try {
    p.scale = parse_scale(field<std::string>(j, "scale", "rd"));
    p.link = parse_link(field<std::string>(j, "link", "identity"));
    std::string est = field<std::string>(j, "estimand", p.method == Method::Weighting ? "ate" : "atc");
    if (j.contains("trim") && !j.at("trim").is_null()) {
      const double a = field(j, "trim", 0.0);
      if (est != "trim" && est.rfind("trim:", 0) != 0) invalid("'trim' is only valid with the trimmed estimand");
      p.estimand = Estimand::trimmed(a);
    } else {
      if (est == "trim") invalid("the trimmed estimand needs a 'trim' threshold");
      p.estimand = Estimand::parse(est);
    }
  } catch (const Error& e) {
    if (e.code() == ErrorCode::PlanInvalid) throw;
    invalid(e.what());
  }

  if (j.contains("horizon") && !j.at("horizon").is_null()) {
    p.horizon = field(j, "horizon", 0.0);
    if (*p.horizon < 0.0) invalid("horizon must be nonnegative");
  }
  if (j.contains("bootstrap") && !j.at("bootstrap").is_null()) {
    const auto& b = j.at("bootstrap");
    BootstrapConfig cfg;
    cfg.replicates = field(b, "replicates", cfg.replicates);
    cfg.level = field(b, "level", cfg.level);
    cfg.seed = field<std::uint64_t>(b, "seed", cfg.seed);
    if (cfg.replicates < 2) invalid("bootstrap replicates must be at least 2");
    if (!(cfg.level > 0.0 && cfg.level < 1.0)) invalid("bootstrap level must lie in (0,1)");
    p.bootstrap = cfg;
  }
  p.checklist = parse_checklist(j.contains("checklist") ? j.at("checklist") : nlohmann::json());
  p.positivity_band = field(j, "positivity_band", p.positivity_band);
  if (!(p.positivity_band >= 0.0 && p.positivity_band < 0.5)) invalid("positivity_band must lie in [0, 0.5)");
  p.balance_threshold = field(j, "balance_threshold", p.balance_threshold);
  p.fail_on_overlap = field(j, "fail_on_overlap", false);
  p.match_variance = field(j, "match_variance", false);
  p.continuity_correction = field(j, "continuity_correction", false);

  switch (p.method) {
    case Method::Weighting:
      if (p.covariates.empty()) invalid("weighting needs a covariate list");
      break;
    case Method::Maic:
    case Method::Stc:
      if (!p.aggregate_path) invalid(to_string(p.method) + " needs an aggregate summary file");
      if (p.covariates.empty()) invalid(to_string(p.method) + " needs a covariate list");
      if (p.estimand.kind() != EstimandKind::ATC)
        invalid(to_string(p.method) + " targets the external control population (ATC) only");
      break;
    case Method::PowerPrior: {
      if (!j.contains("power_prior") || !j.at("power_prior").is_object()) invalid("power_prior settings missing");
      const auto& pp = j.at("power_prior");
      if (!pp.contains("a0")) invalid("power_prior needs a0");
      p.power_prior.a0 = field(pp, "a0", 0.0);
      const auto prior = field(pp, "prior", std::vector<double>{1.0, 1.0});
      if (prior.size() != 2) invalid("power_prior prior must be [alpha, beta]");
      p.power_prior.prior_alpha = prior[0];
      p.power_prior.prior_beta = prior[1];
      p.power_prior.level = field(pp, "level", 0.95);
      p.power_prior.sweep = field(pp, "sweep", std::vector<double>{});
      p.power_prior.assume_comparable = field(pp, "assume_comparable", false);
      if (!p.power_prior.assume_comparable)
        invalid("power prior borrowing requires assume_comparable: true");
      if (!(p.power_prior.a0 >= 0.0 && p.power_prior.a0 <= 1.0)) invalid("a0 must lie in [0,1]");
      break;
    }
  }
  return p;
}

AnalysisPlan load_plan(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) invalid("cannot open plan '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    invalid(std::string("malformed plan JSON: ") + e.what());
  }
  return parse_plan(j, path.parent_path());
}

int exit_code_for(const Error& e) {
  switch (e.family()) {
    case ErrorFamily::Plan: return 2;
    case ErrorFamily::Data: return 3;
    case ErrorFamily::Solver: return 4;
    case ErrorFamily::Positivity: return 5;
  }
  return 1;
}

namespace {

std::string with_hash(const std::string& hash, const std::string& csv) { return "# plan_hash: " + hash + "\n" + csv; }

nlohmann::json finish_report(const AnalysisPlan& plan, nlohmann::json body) {
  body["schema"] = 1;
  body["plan_hash"] = plan.hash;
  body["plan"] = plan.canonical;
  return body;
}

}  // namespace

RunOutputs run_plan(const AnalysisPlan& plan, int threads) {
  if (plan.aggregate_path && !std::filesystem::exists(*plan.aggregate_path))
    invalid("aggregate file '" + plan.aggregate_path->string() + "' does not exist");
  if (!std::filesystem::exists(plan.data_path)) invalid("data file '" + plan.data_path.string() + "' does not exist");

  std::optional<BootstrapConfig> boot = plan.bootstrap;
  if (boot) boot->threads = threads;

  RunOutputs out;
  switch (plan.method) {
    case Method::Weighting: {
      CsvSchema schema;
      schema.require_external = true;
      const Dataset data = load_dataset(plan.data_path, schema);
      WeightingOptions o;
      o.covariates = plan.covariates;
      o.scale = plan.scale;
      o.bootstrap = boot;
      o.checklist = plan.checklist;
      o.estimand = plan.estimand;
      o.horizon = plan.horizon;
      o.positivity_band = plan.positivity_band;
      o.balance_threshold = plan.balance_threshold;
      o.fail_on_overlap = plan.fail_on_overlap;
      const auto res = run_weighting(data, o);
      out.report = finish_report(plan, to_json(res.report));
      out.files["weights.csv"] = with_hash(plan.hash, weights_to_csv(data, res.model.scores, res.weights.weights));
      out.files["balance.csv"] = with_hash(plan.hash, balance_to_csv(res.balance));
      if (res.curve_trial) out.files["curve_trial.csv"] = with_hash(plan.hash, curve_to_csv(*res.curve_trial));
      if (res.curve_external)
        out.files["curve_external.csv"] = with_hash(plan.hash, curve_to_csv(*res.curve_external));
      break;
    }
    case Method::Maic: {
      const Dataset data = load_dataset(plan.data_path);
      const auto target = load_aggregate(*plan.aggregate_path);
      MaicAnalysisOptions o;
      o.covariates = plan.covariates;
      o.scale = plan.scale;
      o.bootstrap = boot;
      o.checklist = plan.checklist;
      o.maic.match_variance = plan.match_variance;
      o.compare.continuity_correction = plan.continuity_correction;
      const auto res = run_maic(data, target, o);
      out.report = finish_report(plan, to_json(res.report));
      out.files["weights.csv"] = with_hash(plan.hash, weights_to_csv(res.trial, {}, res.fit.weights));
      std::string bal = "covariate,target_mean,weighted_trial_mean\n";
      for (std::size_t k = 0; k < res.fit.matched_covariates.size(); ++k)
        bal += res.fit.matched_covariates[k] + "," + format_double(res.fit.target_means[k]) + "," +
               format_double(res.fit.achieved_means[k]) + "\n";
      out.files["balance.csv"] = with_hash(plan.hash, bal);
      break;
    }
    case Method::Stc: {
      const Dataset data = load_dataset(plan.data_path);
      const auto target = load_aggregate(*plan.aggregate_path);
      StcAnalysisOptions o;
      o.covariates = plan.covariates;
      o.scale = plan.scale;
      o.bootstrap = boot;
      o.checklist = plan.checklist;
      o.link = plan.link;
      const auto res = run_stc(data, target, o);
      out.report = finish_report(plan, to_json(res.report));
      break;
    }
    case Method::PowerPrior: {
      CsvSchema schema;
      schema.outcome_kind = OutcomeKind::Binary;
      const Dataset data = load_dataset(plan.data_path, schema);
      const auto trial = count_responders(data, Group::Trial);
      BinomialCounts external;
      if (plan.aggregate_path) {
        const auto agg = load_aggregate(*plan.aggregate_path);
        if (agg.outcome_kind != OutcomeKind::Binary)
          throw Error(ErrorCode::ScaleIncompatibleWithOutcome, "power prior needs a binary external outcome");
        external = {*agg.responders, agg.n};
      } else {
        external = count_responders(data, Group::External);
      }
      nlohmann::json body = run_power_prior(trial, external, plan.power_prior);
      body["diagnostics"] = {{"checklist", to_json(comparability_checklist(plan.checklist))}};
      body["provenance"] = {
          {"steps",
           {{{"step", "estimand"}, {"estimand", "trial response rate"}, {"target_population", "trial population"}},
            {{"step", "selection_diagnostics"}, {"assume_comparable", true}},
            {{"step", "comparison"}, {"method", "power_prior"}}}},
          {"seed", nullptr}};
      out.report = finish_report(plan, body);
      break;
    }
  }
  out.files["report.json"] = dump_json(out.report) + "\n";
  return out;
}

}  // namespace extctrl
