#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "extctrl/analysis.hpp"
#include "extctrl/error.hpp"

namespace extctrl {

enum class Method { Weighting, Maic, Stc, PowerPrior };

std::string to_string(Method m);

/// Declarative, pre-specified analysis. Paths are resolved relative to the
/// plan file. Example:
///
///   {"data": "toy.csv", "method": "weighting", "estimand": "att",
///    "covariates": ["severe"], "scale": "rd",
///    "bootstrap": {"replicates": 200, "level": 0.95, "seed": 7},
///    "checklist": {"eligibility": "aligned", ...}, "fail_on_overlap": false}
struct AnalysisPlan {
  Method method = Method::Weighting;
  std::filesystem::path data_path;
  std::optional<std::filesystem::path> aggregate_path;
  Estimand estimand = Estimand::ate();
  std::vector<std::string> covariates;
  Scale scale = Scale::RiskDifference;
  std::optional<double> horizon;
  Link link = Link::Identity;
  std::optional<BootstrapConfig> bootstrap;
  ComparabilityChecklist checklist;
  double positivity_band = 0.05;
  double balance_threshold = 0.1;
  bool fail_on_overlap = false;
  bool match_variance = false;
  bool continuity_correction = false;
  PowerPriorOptions power_prior;

  /// Canonical form of the plan file (sorted keys) and its SHA-256 digest.
  nlohmann::json canonical;
  std::string hash;
};

/// SHA-256 (hex) of the canonical serialization of a plan document.
std::string plan_hash(const nlohmann::json& plan);

/// Validates a plan document; throws PlanInvalid on any inconsistency.
AnalysisPlan parse_plan(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
AnalysisPlan load_plan(const std::filesystem::path& path);

/// Output files of a run, keyed by file name.
struct RunOutputs {
  nlohmann::json report;
  std::map<std::string, std::string> files;
};

/// Executes a plan: estimand, then diagnostics, then comparison. Every output
/// carries the plan hash. `threads` is passed to the bootstrap (0 = auto).
RunOutputs run_plan(const AnalysisPlan& plan, int threads = 0);

/// Process exit code for an error: plan 2, data 3, solver 4, positivity 5.
int exit_code_for(const Error& e);

}  // namespace extctrl
