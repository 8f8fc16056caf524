// Acceptance gate: one PASS/FAIL line per criterion, exit status 1 if any fails.
// Tolerances are fixed constants below; nothing here is tuned at run time.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include <extctrl/analysis.hpp>
#include <extctrl/plan.hpp>
#include <extctrl/simulate.hpp>

#include "generators.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using namespace extctrl;

namespace {

constexpr double kToyTol = 1e-10;
constexpr double kToySeconds = 1.0;
constexpr int kTableScores = 1000;
constexpr double kTableTol = 1e-12;  // relative to max(1, |closed form|)
constexpr int kOverlapDatasets = 100;
constexpr double kOverlapTol = 1e-6;
constexpr double kMaicTol = 1e-8;
constexpr int kSimReplicates = 200;
constexpr double kSimSeconds = 60.0;
constexpr double kQuadratureTol = 1e-6;
constexpr int kCoverageOuter = 200;
constexpr int kCoverageB = 500;
constexpr double kCoverageLow = 0.90, kCoverageHigh = 0.99;
constexpr double kCoverageSeconds = 300.0;

fs::path data(const std::string& name) { return fs::path(EXTCTRL_TEST_DATA) / name; }

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c);
  return buf;
}

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    if (!ok && pass) {
      pass = false;
      detail = what;
    }
  }
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

bool close(double a, double b, double tol) { return std::abs(a - b) <= tol; }

// 1 ------------------------------------------------------------------------
Outcome toy_golden() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  const auto d = load_dataset(data("toy_severity.csv"));
  const auto model = estimate_propensity(d);
  const auto sev = d.covariate("severe");
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double want = sev[i] == 1.0 ? 0.25 : 0.75;
    o.require(close(model.scores[i], want, kToyTol), "score of " + d.records()[i].id);
  }
  const auto ipw = balancing_weights(model, d, Estimand::ate());
  const auto att = balancing_weights(model, d, Estimand::att());
  const auto atc = balancing_weights(model, d, Estimand::atc());
  for (std::size_t i = 0; i < d.size(); ++i) {
    const bool trial = d.records()[i].is_trial(), severe = sev[i] == 1.0;
    const double w_ipw = trial ? (severe ? 4.0 : 4.0 / 3) : (severe ? 4.0 / 3 : 4.0);
    const double w_atc = trial ? (severe ? 3.0 : 1.0 / 3) : 1.0;
    const double w_att = trial ? 1.0 : (severe ? 1.0 / 3 : 3.0);
    o.require(close(ipw.weights[i], w_ipw, kToyTol), "IPW weight of " + d.records()[i].id);
    o.require(close(atc.weights[i], w_atc, kToyTol), "ATC weight of " + d.records()[i].id);
    o.require(close(att.weights[i], w_att, kToyTol), "ATT weight of " + d.records()[i].id);
  }
  const std::pair<const WeightSet*, double> prevalence[] = {{&ipw, 0.5}, {&att, 0.25}, {&atc, 0.75}};
  for (const auto& [ws, want] : prevalence) {
    const auto [t, e] = weighted_prevalence(*ws, d, "severe");
    o.require(close(t, want, kToyTol) && close(e, want, kToyTol),
              ws->estimand.name() + " prevalence " + fmt("%.17g/%.17g", t, e));
  }
  const double secs = seconds_since(t0);
  o.require(secs < kToySeconds, fmt("runtime %.3fs", secs));
  if (o.pass) o.detail = fmt("scores, IPW/ATT/ATC weights and prevalences within 1e-10; %.4fs", secs);
  return o;
}

// 2 ------------------------------------------------------------------------
Outcome table_rows() {
  Outcome o;
  std::mt19937_64 rng(20261016);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  struct Row {
    Estimand est;
    std::function<double(double)> trial, external;
  };
  const double a = 0.1;
  const std::vector<Row> rows = {
      {Estimand::ate(), [](double e) { return 1 / e; }, [](double e) { return 1 / (1 - e); }},
      {Estimand::att(), [](double) { return 1.0; }, [](double e) { return e / (1 - e); }},
      {Estimand::atc(), [](double e) { return (1 - e) / e; }, [](double) { return 1.0; }},
      {Estimand::ato(), [](double e) { return 1 - e; }, [](double e) { return e; }},
      {Estimand::trimmed(a), [a](double e) { return (a < e && e < 1 - a) ? 1 / e : 0.0; },
       [a](double e) { return (a < e && e < 1 - a) ? 1 / (1 - e) : 0.0; }},
      {Estimand::matching(), [](double e) { return std::min(e, 1 - e) / e; },
       [](double e) { return std::min(e, 1 - e) / (1 - e); }},
  };
  const auto rel = [](double got, double want) { return std::abs(got - want) <= kTableTol * std::max(1.0, std::abs(want)); };
  int checked = 0;
  for (int k = 0; k < kTableScores; ++k) {
    double e = unif(rng);
    while (e <= 0.0) e = unif(rng);
    for (const auto& r : rows) {
      const double wt = balancing_weight(r.est, e, Group::Trial);
      const double we = balancing_weight(r.est, e, Group::External);
      const double h = tilting(r.est, e);
      o.require(rel(wt, r.trial(e)) && rel(we, r.external(e)), r.est.name() + fmt(" closed form at e=%.17g", e));
      o.require(rel(wt, h / e) && rel(we, h / (1 - e)), r.est.name() + fmt(" tilting form at e=%.17g", e));
      checked += 2;
    }
  }
  if (o.pass) o.detail = std::to_string(checked) + " weights match closed and tilting forms (rel 1e-12)";
  return o;
}

// 3 ------------------------------------------------------------------------
Outcome overlap_balance() {
  Outcome o;
  gen::Rng rng(303);
  double worst = 0.0;
  for (int rep = 0; rep < kOverlapDatasets; ++rep) {
    const auto d = gen::logistic_confounded(rng, 200, 3);
    const auto ws = balancing_weights(estimate_propensity(d), d, Estimand::ato());
    for (const auto& c : d.covariate_names()) {
      const auto [t, e] = weighted_prevalence(ws, d, c);
      worst = std::max(worst, std::abs(t - e));
    }
  }
  o.require(worst < kOverlapTol, fmt("max ATO mean difference %.3g", worst));
  if (o.pass) o.detail = fmt("100 datasets x 3 covariates, max |diff| %.3g < 1e-6", worst);
  return o;
}

// 4 ------------------------------------------------------------------------
double moment_error(const Dataset& d, const MaicFit& fit, const AggregateSummary& agg) {
  const auto trial = d.subset(Group::Trial);
  double worst = 0.0;
  for (const auto& c : fit.matched_covariates) {
    const auto x = trial.covariate(c);
    const double m = oracle::weighted_mean(x, fit.weights, std::vector<bool>(x.size(), true));
    worst = std::max(worst, std::abs(m - agg.mean_of(c)));
  }
  return worst;
}

Outcome maic_acceptance() {
  Outcome o;
  struct Fixture {
    const char* csv;
    const char* target;
    std::vector<std::string> covariates;
  };
  const Fixture fixtures[] = {
      {"toy_severity.csv", "toy_target.json", {"severe"}},
      {"blast_counts.csv", "all272_aggregate.json", {"mrd_high"}},
      {"sim_binary.csv", "sim_binary_target.json", {"age", "severe"}},
  };
  double worst = 0.0;
  for (const auto& f : fixtures) {
    const auto d = load_dataset(data(f.csv));
    const auto agg = load_aggregate(data(f.target));
    const auto fit = maic_weights(d, agg, f.covariates);
    const double err = moment_error(d, fit, agg);
    worst = std::max(worst, err);
    o.require(err < kMaicTol, std::string(f.csv) + fmt(" moment error %.3g", err));
  }

  // one binary covariate: MAIC weights are proportional to ATC weights
  double spread = 0.0;
  for (const char* csv : {"toy_severity.csv", "sim_binary.csv"}) {
    const auto d = load_dataset(data(csv));
    const std::string cov = "severe";
    const auto ps = estimate_propensity(d, {cov});
    const auto atc = balancing_weights(ps, d, Estimand::atc());
    AggregateSummary target;
    target.covariate_names = {cov};
    target.covariate_means = {weighted_prevalence(unit_weights(d), d, cov).second};
    target.covariate_sds = {std::nullopt};
    target.n = static_cast<int>(d.n_external());
    target.responders = 0;
    const auto fit = maic_weights(d, target, {cov});
    std::vector<double> ratios;
    std::size_t k = 0;
    for (std::size_t i = 0; i < d.size(); ++i)
      if (d.records()[i].is_trial()) ratios.push_back(fit.weights[k++] / atc.weights[i]);
    for (double r : ratios) spread = std::max(spread, std::abs(r / ratios[0] - 1.0));
  }
  o.require(spread < kMaicTol, fmt("MAIC/ATC ratio spread %.3g", spread));

  bool raised = false;
  try {
    maic_weights(load_dataset(data("toy_severity.csv")), load_aggregate(data("toy_target_boundary.json")), {"severe"});
  } catch (const Error& e) {
    raised = e.code() == ErrorCode::TargetOutsideSupport;
  }
  o.require(raised, "boundary target did not raise TargetOutsideSupport");
  if (o.pass)
    o.detail = fmt("3 fixtures, max moment error %.3g; MAIC/ATC ratio spread %.3g; TargetOutsideSupport raised", worst,
                   spread);
  return o;
}

// 5 ------------------------------------------------------------------------
struct GapStats {
  double mean = 0.0, se = 0.0;
  bool unbiased() const { return std::abs(mean) < 3 * se; }
};

GapStats gap_stats(const std::vector<double>& g) {
  double s = 0.0, s2 = 0.0;
  for (double v : g) s += v;
  const double n = static_cast<double>(g.size()), m = s / n;
  for (double v : g) s2 += (v - m) * (v - m);
  return {m, std::sqrt(s2 / (n - 1) / n)};
}

Outcome simulation_recovery() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  auto null_cfg = parse_scenario(nlohmann::json::parse(slurp(data("scenario_null.json"))));
  auto conf_cfg = parse_scenario(nlohmann::json::parse(slurp(data("scenario_confounded.json"))));
  const auto null_truth = compute_truth(null_cfg), conf_truth = compute_truth(conf_cfg);
  WeightingOptions ipw, att;
  att.estimand = Estimand::att();
  std::vector<double> g_ipw, g_att, c_naive, c_ipw;
  for (int r = 0; r < kSimReplicates; ++r) {
    null_cfg.seed = substream_seed(5001, static_cast<std::uint64_t>(r));
    conf_cfg.seed = substream_seed(5002, static_cast<std::uint64_t>(r));
    const auto a = generate(null_cfg, null_truth);
    g_ipw.push_back(weighting_estimate(a.data, ipw) - null_truth.ate.value);
    g_att.push_back(weighting_estimate(a.data, att) - null_truth.att.value);
    const auto b = generate(conf_cfg, conf_truth);
    c_naive.push_back(weighted_mean_contrast(b.data, unit_weights(b.data), Scale::RiskDifference).estimate -
                      conf_truth.ate.value);
    c_ipw.push_back(weighting_estimate(b.data, ipw) - conf_truth.ate.value);
  }
  const auto n_ipw = gap_stats(g_ipw), n_att = gap_stats(g_att), s_naive = gap_stats(c_naive), s_ipw = gap_stats(c_ipw);
  const double secs = seconds_since(t0);
  o.require(n_ipw.unbiased(), fmt("null IPW mean gap %.4g, SE %.4g", n_ipw.mean, n_ipw.se));
  o.require(n_att.unbiased(), fmt("null ATT mean gap %.4g, SE %.4g", n_att.mean, n_att.se));
  o.require(!s_naive.unbiased(), fmt("confounded naive gap %.4g not beyond 3 SE (%.4g)", s_naive.mean, s_naive.se));
  o.require(s_ipw.unbiased(), fmt("confounded IPW gap %.4g, SE %.4g", s_ipw.mean, s_ipw.se));
  o.require(secs < kSimSeconds, fmt("runtime %.1fs", secs));
  if (o.pass) {
    o.detail = fmt("null gaps IPW %.2g (SE %.2g), ATT %.2g", n_ipw.mean, n_ipw.se, n_att.mean) + fmt(" (SE %.2g); ", n_att.se) +
               fmt("confounded naive %.3g (SE %.2g), IPW %.2g", s_naive.mean, s_naive.se, s_ipw.mean) + fmt("; %.1fs", secs);
  }
  return o;
}

// 6 ------------------------------------------------------------------------
Outcome power_prior_edges() {
  Outcome o;
  const BinomialCounts trial{52, 61};
  const auto agg = load_aggregate(data("all272_aggregate.json"));
  const BinomialCounts ext{*agg.responders, agg.n};
  const double a = 1.0, b = 1.0;

  const auto p0 = power_prior_posterior(trial, ext, 0.0, a, b);
  o.require(p0.posterior_alpha == a + 52 && p0.posterior_beta == b + 9, "a0=0 is not the trial-only posterior");
  const auto p1 = power_prior_posterior(trial, ext, 1.0, a, b);
  o.require(p1.posterior_alpha == a + 52 + ext.responders && p1.posterior_beta == b + 9 + (ext.n - ext.responders),
            "a0=1 is not the pooled posterior");

  // density at a0 = 0.5 against a normalized likelihood-times-prior integrated by Simpson's rule
  const double a0 = 0.5;
  const auto post = power_prior_posterior(trial, ext, a0, a, b);
  const double ea = a - 1 + trial.responders + a0 * ext.responders;
  const double eb = b - 1 + (trial.n - trial.responders) + a0 * (ext.n - ext.responders);
  const double mode = ea / (ea + eb);
  const double log_peak = ea * std::log(mode) + eb * std::log1p(-mode);
  const auto kernel = [&](double p) {
    if (p <= 0.0 || p >= 1.0) return 0.0;
    return std::exp(ea * std::log(p) + eb * std::log1p(-p) - log_peak);
  };
  const double z = oracle::simpson(kernel, 0.0, 1.0, 200000);
  const double mean_q = oracle::simpson([&](double p) { return p * kernel(p); }, 0.0, 1.0, 200000) / z;
  double worst = std::abs(mean_q - post.mean());
  for (int i = 1; i < 200; ++i) {
    const double p = i / 200.0;
    worst = std::max(worst, std::abs(beta_pdf(p, post.posterior_alpha, post.posterior_beta) - kernel(p) / z));
  }
  o.require(worst < kQuadratureTol, fmt("quadrature mismatch %.3g", worst));
  if (o.pass) o.detail = fmt("a0=0 and a0=1 exact; a0=0.5 density/mean vs quadrature max err %.3g", worst);
  return o;
}

// 7 ------------------------------------------------------------------------
Outcome km_oracle() {
  Outcome o;
  int files = 0;
  std::vector<fs::path> paths;
  for (const auto& e : fs::directory_iterator(data("km"))) paths.push_back(e.path());
  std::sort(paths.begin(), paths.end());
  for (const auto& p : paths) {
    std::ifstream in(p);
    std::string line;
    std::getline(in, line);
    std::vector<double> t, w;
    std::vector<int> ev;
    while (std::getline(in, line)) {
      if (line.empty()) continue;
      std::stringstream ss(line);
      std::string a, b, c;
      std::getline(ss, a, ',');
      std::getline(ss, b, ',');
      std::getline(ss, c, ',');
      t.push_back(std::stod(a));
      ev.push_back(std::stoi(b));
      w.push_back(std::stod(c));
    }
    if (t.size() > 10) continue;
    ++files;
    const auto name = p.filename().string();
    const auto check = [&](const std::vector<double>& weights, const std::string& label) {
      const auto ref = oracle::kaplan_meier(t, ev, weights);
      const auto c = weighted_km(t, ev, weights);
      o.require(c.time.size() == ref.size(), name + " " + label + ": step count");
      for (std::size_t j = 0; j < ref.size() && j < c.time.size(); ++j)
        o.require(c.time[j] == ref[j].time && c.survival[j] == ref[j].survival,
                  name + " " + label + fmt(": step at t=%.17g", ref[j].time));
    };
    check(w, "weighted");
    check(std::vector<double>(t.size(), 1.0), "unit");
  }
  o.require(files >= 5, "expected at least five fixtures");
  if (o.pass) o.detail = std::to_string(files) + " fixtures, weighted and unit-weight curves equal the oracle exactly";
  return o;
}

// 8 ------------------------------------------------------------------------
Outcome determinism() {
  Outcome o;
  const auto plan_path = data("plans/weighting_bootstrap.json");
  std::random_device rd;
  const auto dir = fs::temp_directory_path() / ("extctrl_accept_" + std::to_string(rd()));
  fs::create_directories(dir);
  const auto run = [&](const std::string& sub, int threads) {
    const auto out = dir / sub;
#ifdef EXTCTRL_CLI
    const std::string cmd = "EXTCTRL_THREADS=" + std::to_string(threads) + " '" EXTCTRL_CLI "' --out-dir '" +
                            out.string() + "' run '" + plan_path.string() + "' >/dev/null 2>&1";
    if (std::system(cmd.c_str()) != 0) return std::string("<run failed>");
#else
    const auto res = run_plan(load_plan(plan_path), threads);
    fs::create_directories(out);
    std::ofstream(out / "report.json", std::ios::binary) << res.files.at("report.json");
#endif
    return slurp(out / "report.json");
  };
  const auto first = run("a", 1), second = run("b", 1), parallel = run("c", 4);
  fs::remove_all(dir);
  o.require(first.size() > 2 && first != "<run failed>", "run failed");
  o.require(first == second, "two serial invocations differ");
  o.require(first == parallel, "serial and 4-thread reports differ");
  if (o.pass) o.detail = "report.json byte-identical across repeat and 1 vs 4 threads (" + std::to_string(first.size()) + " bytes)";
  return o;
}

// 9 ------------------------------------------------------------------------
Outcome bootstrap_coverage() {
  Outcome o;
  const auto t0 = std::chrono::steady_clock::now();
  auto cfg = parse_scenario(nlohmann::json::parse(slurp(data("scenario_coverage.json"))));
  const auto truth = compute_truth(cfg);
  WeightingOptions w;
  int covered = 0;
  for (int r = 0; r < kCoverageOuter; ++r) {
    cfg.seed = substream_seed(9009, static_cast<std::uint64_t>(r));
    const auto s = generate(cfg, truth);
    BootstrapConfig bc;
    bc.replicates = kCoverageB;
    bc.level = 0.95;
    bc.seed = substream_seed(9010, static_cast<std::uint64_t>(r));
    const auto ci = bootstrap_ci(s.data, [&](const Dataset& x) { return weighting_estimate(x, w); }, bc);
    if (ci.lower <= truth.ate.value && truth.ate.value <= ci.upper) ++covered;
  }
  const double coverage = static_cast<double>(covered) / kCoverageOuter;
  const double secs = seconds_since(t0);
  o.require(coverage >= kCoverageLow && coverage <= kCoverageHigh, fmt("coverage %.3f", coverage));
  o.require(secs < kCoverageSeconds, fmt("runtime %.1fs", secs));
  if (o.pass) o.detail = fmt("95%% percentile CI covered truth in %.3f of 200 outer reps (B=500); %.1fs", coverage, secs);
  return o;
}

}  // namespace

int main() {
  struct Criterion {
    const char* name;
    Outcome (*fn)();
  };
  const Criterion criteria[] = {
      {"toy-example-golden", toy_golden},
      {"weight-closed-forms", table_rows},
      {"overlap-exact-balance", overlap_balance},
      {"maic-moments", maic_acceptance},
      {"simulation-recovery", simulation_recovery},
      {"power-prior-edges", power_prior_edges},
      {"weighted-km-oracle", km_oracle},
      {"determinism", determinism},
      {"bootstrap-coverage", bootstrap_coverage},
  };
  int failures = 0, index = 0;
  for (const auto& c : criteria) {
    ++index;
    Outcome out;
    try {
      out = c.fn();
    } catch (const std::exception& e) {
      out.pass = false;
      out.detail = std::string("exception: ") + e.what();
    }
    failures += out.pass ? 0 : 1;
    std::printf("%s %d %s: %s\n", out.pass ? "PASS" : "FAIL", index, c.name, out.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%d criteria passed\n", index - failures, index);
  return failures == 0 ? 0 : 1;
}
