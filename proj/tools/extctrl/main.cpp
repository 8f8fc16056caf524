#include <iostream>

#include <CLI11.hpp>

#include <extctrl/plan.hpp>

#include "commands.hpp"

namespace {

using namespace extctrl::cli;

void add_data(CLI::App* app, DataOptions& in) {
  app->add_option("--data", in.data, "Individual-level CSV (id, group, covariates, outcome)")->required();
  app->add_option("--covariates", in.covariates, "Comma-separated covariates (default: all)")->delimiter(',');
}

void add_weighting(CLI::App* app, WeightCmd& w, bool with_estimand) {
  add_data(app, w.in);
  if (with_estimand)
    app->add_option("--estimand", w.estimand, "ate|att|atc|ato|matching|trim:<a>")->capture_default_str();
  app->add_option("--band", w.band, "Positivity band for the overlap report")->capture_default_str();
}

void add_bootstrap(CLI::App* app, BootstrapOptions& b) {
  app->add_option("--bootstrap", b.replicates, "Bootstrap replicates (0 = none)")->capture_default_str();
  app->add_option("--level", b.level, "Confidence level")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Indirect comparison of a single-arm trial with external controls"};
  app.require_subcommand(1);

  GlobalOptions g;
  std::uint64_t seed = 0;
  auto* seed_opt = app.add_option("--seed", seed, "Root seed for bootstrap and simulation");
  app.add_option("--out-dir", g.out_dir, "Write every artifact into this directory");
  app.add_option("--format", g.format, "Artifact printed to stdout without --out-dir")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();
  app.fallthrough();

  WeightCmd ps_cmd;
  auto* ps = app.add_subcommand("ps-fit", "Fit the propensity model; scores CSV and positivity JSON");
  add_weighting(ps, ps_cmd, false);

  WeightCmd w_cmd;
  auto* w = app.add_subcommand("weight", "Balancing weights for an estimand; weights CSV and ESS JSON");
  add_weighting(w, w_cmd, true);

  BalanceCmd b_cmd;
  auto* b = app.add_subcommand("balance", "Covariate balance table and comparability checklist");
  add_weighting(b, b_cmd.w, true);
  b->add_option("--threshold", b_cmd.threshold, "SMD threshold")->capture_default_str();
  b->add_option("--checklist", b_cmd.checklist, "Comparability checklist JSON");

  CompareCmd c_cmd;
  auto* c = app.add_subcommand("compare", "Weighted comparison; EffectReport JSON");
  add_weighting(c, c_cmd.w, true);
  c->add_option("--scale", c_cmd.scale, "rd|rr|or|md|sd")->capture_default_str();
  c->add_option("--horizon", c_cmd.horizon, "Horizon for survival outcomes");
  c->add_option("--threshold", c_cmd.threshold, "SMD threshold")->capture_default_str();
  c->add_flag("--fail-on-overlap", c_cmd.fail_on_overlap, "Exit 5 when overlap is insufficient");
  c->add_option("--checklist", c_cmd.checklist, "Comparability checklist JSON");
  add_bootstrap(c, c_cmd.boot);

  MaicCmd m_cmd;
  auto* m = app.add_subcommand("maic", "Matching-adjusted indirect comparison against an aggregate summary");
  add_data(m, m_cmd.in);
  m->add_option("--target", m_cmd.target, "Aggregate summary JSON")->required();
  m->add_option("--scale", m_cmd.scale, "rd|rr|or|md|sd")->capture_default_str();
  m->add_flag("--match-variance", m_cmd.match_variance, "Also match covariate variances");
  m->add_flag("--continuity-correction", m_cmd.continuity_correction, "Add 0.5 to zero cells");
  m->add_option("--checklist", m_cmd.checklist, "Comparability checklist JSON");
  add_bootstrap(m, m_cmd.boot);

  StcCmd s_cmd;
  auto* s = app.add_subcommand("stc", "Simulated treatment comparison against an aggregate summary");
  add_data(s, s_cmd.in);
  s->add_option("--target", s_cmd.target, "Aggregate summary JSON")->required();
  s->add_option("--link", s_cmd.link, "identity|logit")->capture_default_str();
  s->add_option("--scale", s_cmd.scale, "rd|rr|or|md")->capture_default_str();
  s->add_option("--checklist", s_cmd.checklist, "Comparability checklist JSON");
  add_bootstrap(s, s_cmd.boot);

  BorrowCmd br_cmd;
  auto* br = app.add_subcommand("borrow", "Power-prior borrowing for a binary response rate");
  br->add_option("--data", br_cmd.data, "CSV with trial (and optionally external) binary outcomes");
  br->add_option("--target", br_cmd.target, "Aggregate summary JSON for the external group");
  br->add_option("--trial", br_cmd.trial, "Trial counts x,n")->delimiter(',')->expected(2);
  br->add_option("--external", br_cmd.external, "External counts x0,n0")->delimiter(',')->expected(2);
  br->add_option("--a0", br_cmd.a0, "Discount in [0,1]")->required();
  br->add_option("--prior", br_cmd.prior, "Beta prior a,b")->delimiter(',')->expected(2);
  br->add_option("--level", br_cmd.level, "Credible level")->capture_default_str();
  br->add_option("--sweep", br_cmd.sweep, "Comma-separated a0 grid for sensitivity")->delimiter(',');
  br->add_flag("--assume-comparable", br_cmd.assume_comparable, "State that the populations are comparable");

  SimulateCmd sim_cmd;
  auto* sim = app.add_subcommand("simulate", "Generate a scenario dataset with its true effects");
  sim->add_option("--scenario", sim_cmd.scenario, "Scenario JSON")->required();
  sim->add_option("--out", sim_cmd.out, "Dataset CSV path");

  RunCmd r_cmd;
  auto* r = app.add_subcommand("run", "Execute a pre-specified analysis plan");
  r->add_option("plan", r_cmd.plan, "Plan JSON")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }
  if (seed_opt->count() > 0) g.seed = seed;

  try {
    if (*ps) return ps_fit(g, ps_cmd);
    if (*w) return weight(g, w_cmd);
    if (*b) return balance(g, b_cmd);
    if (*c) return compare(g, c_cmd);
    if (*m) return maic(g, m_cmd);
    if (*s) return stc(g, s_cmd);
    if (*br) return borrow(g, br_cmd);
    if (*sim) return simulate(g, sim_cmd);
    if (*r) return run(g, r_cmd);
  } catch (const extctrl::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return extctrl::exit_code_for(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
