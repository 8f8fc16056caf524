#include "commands.hpp"

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>

#include <extctrl/analysis.hpp>
#include <extctrl/json_format.hpp>
#include <extctrl/plan.hpp>
#include <extctrl/simulate.hpp>

namespace extctrl::cli {

namespace fs = std::filesystem;

namespace {

/// Artifacts of one command. With --out-dir every artifact is written to a
/// file; otherwise the first artifact matching --format goes to stdout.
class Outputs {
 public:
  explicit Outputs(const GlobalOptions& g) : g_(g) {}

  void add(const std::string& name, std::string content) { files_.emplace_back(name, std::move(content)); }
  void add_json(const std::string& name, const nlohmann::json& j) { add(name, dump_json(j) + "\n"); }

  int flush() const {
    if (!g_.out_dir.empty()) {
      std::error_code ec;
      fs::create_directories(g_.out_dir, ec);
      for (const auto& [name, content] : files_) {
        const fs::path p = fs::path(g_.out_dir) / name;
        std::ofstream out(p, std::ios::binary);
        out << content;
        if (!out) throw Error(ErrorCode::IoError, "cannot write '" + p.string() + "'");
      }
      return 0;
    }
    const std::string ext = "." + g_.format;
    for (const auto& [name, content] : files_) {
      if (name.size() >= ext.size() && name.compare(name.size() - ext.size(), ext.size(), ext) == 0) {
        std::cout << content;
        return 0;
      }
    }
    if (!files_.empty()) std::cout << files_.front().second;
    return 0;
  }

 private:
  const GlobalOptions& g_;
  std::vector<std::pair<std::string, std::string>> files_;
};

nlohmann::json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path + "'");
  try {
    nlohmann::json j;
    in >> j;
    return j;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::SchemaViolation, "malformed JSON in '" + path + "': " + e.what());
  }
}

ComparabilityChecklist load_checklist(const std::string& path) {
  if (path.empty()) return {};
  return parse_checklist(read_json(path));
}

Dataset load_individual(const DataOptions& in, bool require_external) {
  CsvSchema schema;
  schema.require_external = require_external;
  return load_dataset(in.data, schema);
}

std::optional<BootstrapConfig> bootstrap_config(const GlobalOptions& g, const BootstrapOptions& b, Resampling mode) {
  if (b.replicates == 0) return std::nullopt;
  BootstrapConfig c;
  c.replicates = b.replicates;
  c.level = b.level;
  c.seed = g.seed.value_or(0);
  c.resampling = mode;
  if (c.replicates < 2) throw Error(ErrorCode::InvalidConfig, "--bootstrap needs at least 2 replicates");
  if (!(c.level > 0.0 && c.level < 1.0)) throw Error(ErrorCode::InvalidConfig, "--level must lie in (0,1)");
  return c;
}

std::vector<std::string> covariates_or_all(const Dataset& data, const std::vector<std::string>& requested) {
  return requested.empty() ? data.covariate_names() : requested;
}

nlohmann::json ess_json(const WeightSet& ws) {
  return {{"estimand", ws.estimand.name()},
          {"target_population", ws.estimand.target_population_label()},
          {"ess_trial", ws.ess_trial},
          {"ess_external", ws.ess_external},
          {"n_zero_weight", ws.n_zero_weight}};
}

std::string scores_csv(const Dataset& data, const std::vector<double>& scores) {
  std::string out = "id,score\n";
  for (std::size_t i = 0; i < data.size(); ++i) out += data.records()[i].id + "," + format_double(scores[i]) + "\n";
  return out;
}

}  // namespace

int ps_fit(const GlobalOptions& g, const WeightCmd& c) {
  const Dataset data = load_individual(c.in, true);
  const auto model = estimate_propensity(data, covariates_or_all(data, c.in.covariates));
  Outputs out(g);
  out.add("scores.csv", scores_csv(data, model.scores));
  auto j = to_json(positivity_report(model, data, c.band));
  j["covariates"] = model.covariate_names;
  j["dropped_constant"] = model.dropped_constant;
  out.add_json("positivity.json", j);
  return out.flush();
}

int weight(const GlobalOptions& g, const WeightCmd& c) {
  const Dataset data = load_individual(c.in, true);
  const auto est = Estimand::parse(c.estimand);
  const auto model = estimate_propensity(data, covariates_or_all(data, c.in.covariates));
  const auto ws = balancing_weights(model, data, est);
  Outputs out(g);
  out.add("weights.csv", weights_to_csv(data, model.scores, ws.weights));
  out.add_json("ess.json", ess_json(ws));
  return out.flush();
}

int balance(const GlobalOptions& g, const BalanceCmd& c) {
  const Dataset data = load_individual(c.w.in, true);
  const auto covs = covariates_or_all(data, c.w.in.covariates);
  const auto model = estimate_propensity(data, covs);
  const auto ws = balancing_weights(model, data, Estimand::parse(c.w.estimand));
  const auto table = balance_table(data, ws, c.threshold, covs);
  nlohmann::json j{{"estimand", ws.estimand.name()},
                   {"balance", to_json(table)},
                   {"positivity", to_json(positivity_report(model, data, c.w.band))},
                   {"checklist", to_json(comparability_checklist(load_checklist(c.checklist)))}};
  Outputs out(g);
  out.add_json("balance.json", j);
  out.add("balance.csv", balance_to_csv(table));
  return out.flush();
}

int compare(const GlobalOptions& g, const CompareCmd& c) {
  const Dataset data = load_individual(c.w.in, true);
  WeightingOptions o;
  o.covariates = covariates_or_all(data, c.w.in.covariates);
  o.scale = parse_scale(c.scale);
  o.estimand = Estimand::parse(c.w.estimand);
  o.horizon = c.horizon;
  o.positivity_band = c.w.band;
  o.balance_threshold = c.threshold;
  o.fail_on_overlap = c.fail_on_overlap;
  o.checklist = load_checklist(c.checklist);
  o.bootstrap = bootstrap_config(g, c.boot, Resampling::StratifiedByGroup);
  const auto res = run_weighting(data, o);
  Outputs out(g);
  auto j = to_json(res.report);
  j["schema"] = 1;
  out.add_json("report.json", j);
  if (res.curve_trial) out.add("curve_trial.csv", curve_to_csv(*res.curve_trial));
  if (res.curve_external) out.add("curve_external.csv", curve_to_csv(*res.curve_external));
  out.add("weights.csv", weights_to_csv(data, res.model.scores, res.weights.weights));
  return out.flush();
}

int maic(const GlobalOptions& g, const MaicCmd& c) {
  const Dataset data = load_individual(c.in, false);
  const auto target = load_aggregate(c.target);
  MaicAnalysisOptions o;
  o.covariates = c.in.covariates.empty() ? target.covariate_names : c.in.covariates;
  o.scale = parse_scale(c.scale);
  o.checklist = load_checklist(c.checklist);
  o.maic.match_variance = c.match_variance;
  o.compare.continuity_correction = c.continuity_correction;
  o.bootstrap = bootstrap_config(g, c.boot, Resampling::TrialOnly);
  const auto res = run_maic(data, target, o);
  Outputs out(g);
  auto j = to_json(res.report);
  j["schema"] = 1;
  out.add_json("report.json", j);
  out.add("weights.csv", weights_to_csv(res.trial, {}, res.fit.weights));
  return out.flush();
}

int stc(const GlobalOptions& g, const StcCmd& c) {
  const Dataset data = load_individual(c.in, false);
  const auto target = load_aggregate(c.target);
  StcAnalysisOptions o;
  o.covariates = c.in.covariates.empty() ? target.covariate_names : c.in.covariates;
  o.scale = parse_scale(c.scale);
  o.link = parse_link(c.link);
  o.checklist = load_checklist(c.checklist);
  o.bootstrap = bootstrap_config(g, c.boot, Resampling::TrialOnly);
  const auto res = run_stc(data, target, o);
  Outputs out(g);
  auto j = to_json(res.report);
  j["schema"] = 1;
  out.add_json("report.json", j);
  return out.flush();
}

int borrow(const GlobalOptions& g, const BorrowCmd& c) {
  BinomialCounts trial, external;
  bool have_external = false;
  if (!c.data.empty()) {
    CsvSchema schema;
    schema.outcome_kind = OutcomeKind::Binary;
    const Dataset data = load_dataset(c.data, schema);
    trial = count_responders(data, Group::Trial);
    if (data.has_external()) {
      external = count_responders(data, Group::External);
      have_external = true;
    }
  } else if (c.trial.size() == 2) {
    trial = {c.trial[0], c.trial[1]};
  } else {
    throw Error(ErrorCode::InvalidConfig, "borrow needs --data or --trial x,n");
  }
  if (!c.target.empty()) {
    const auto agg = load_aggregate(c.target);
    if (agg.outcome_kind != OutcomeKind::Binary)
      throw Error(ErrorCode::ScaleIncompatibleWithOutcome, "power prior needs a binary external outcome");
    external = {*agg.responders, agg.n};
    have_external = true;
  } else if (c.external.size() == 2) {
    external = {c.external[0], c.external[1]};
    have_external = true;
  }
  if (!have_external) throw Error(ErrorCode::InvalidConfig, "borrow needs external counts (--external, --target or --data)");
  if (c.prior.size() != 2) throw Error(ErrorCode::InvalidConfig, "--prior takes two values a,b");

  PowerPriorOptions o;
  o.a0 = c.a0;
  o.prior_alpha = c.prior[0];
  o.prior_beta = c.prior[1];
  o.level = c.level;
  o.sweep = c.sweep;
  o.assume_comparable = c.assume_comparable;
  auto j = run_power_prior(trial, external, o);
  j["schema"] = 1;
  Outputs out(g);
  out.add_json("borrow.json", j);
  return out.flush();
}

int simulate(const GlobalOptions& g, const SimulateCmd& c) {
  ScenarioConfig cfg;
  try {
    cfg = parse_scenario(read_json(c.scenario));
  } catch (const Error& e) {
    if (e.code() == ErrorCode::InvalidConfig) throw Error(ErrorCode::PlanInvalid, e.what());
    throw;
  }
  if (g.seed) cfg.seed = *g.seed;
  const auto sim = generate(cfg);
  nlohmann::json truth = to_json(sim.truth);
  truth["scenario"] = to_json(cfg);
  truth["schema"] = 1;
  if (!c.out.empty()) {
    std::ofstream csv(c.out, std::ios::binary);
    csv << dataset_to_csv(sim.data);
    if (!csv) throw Error(ErrorCode::IoError, "cannot write '" + c.out + "'");
    Outputs out(g);
    out.add_json("truth.json", truth);
    return out.flush();
  }
  Outputs out(g);
  out.add("simulated.csv", dataset_to_csv(sim.data));
  out.add_json("truth.json", truth);
  return out.flush();
}

int run(const GlobalOptions& g, const RunCmd& c) {
  const auto plan = load_plan(c.plan);
  if (g.seed && (!plan.bootstrap || plan.bootstrap->seed != *g.seed))
    throw Error(ErrorCode::PlanInvalid, "the seed of a plan run is fixed by the plan's bootstrap section");
  const auto res = run_plan(plan, 0);
  GlobalOptions local = g;
  if (local.out_dir.empty()) local.out_dir = ".";
  Outputs out(local);
  for (const auto& [name, content] : res.files) out.add(name, content);
  return out.flush();
}

}  // namespace extctrl::cli
