#pragma once

#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "extctrl/balancing.hpp"
#include "extctrl/dataset.hpp"

namespace extctrl {

struct BalanceRow {
  std::string covariate;
  double mean_trial = 0.0;
  double mean_external = 0.0;
  double weighted_mean_trial = 0.0;
  double weighted_mean_external = 0.0;
  /// Empty when the pooled variance is zero.
  std::optional<double> smd_unweighted;
  std::optional<double> smd_weighted;
};

struct BalanceTable {
  std::vector<BalanceRow> rows;
  double ess_trial = 0.0;
  double ess_external = 0.0;
  double max_abs_weighted_smd = 0.0;
  double threshold = 0.1;
  bool imbalance = false;
  /// One entry per undefined SMD ("ZeroPooledVariance: <covariate> (weighted)").
  std::vector<std::string> notes;
};

/// (m1 - m0) / sqrt((s1^2 + s0^2) / 2) with weighted means and Sum(w)-denominator
/// weighted variances. Returns nullopt when the pooled variance is zero.
std::optional<double> standardized_mean_difference(std::span<const double> values, std::span<const double> weights,
                                                   std::span<const Group> groups);

/// Balance before and after weighting for the named covariates (all when empty).
BalanceTable balance_table(const Dataset& data, const WeightSet& weights, double threshold = 0.1,
                           const std::vector<std::string>& covariates = {});

nlohmann::json to_json(const BalanceTable& t);
std::string balance_to_csv(const BalanceTable& t);

// ---------------------------------------------------------------------------

enum class ChecklistStatus { Pass, Warn, Incomplete };
std::string to_string(ChecklistStatus s);

/// Analyst-completed comparability review. Item values: "aligned",
/// "misaligned", "unknown", and for calendar time also "non-contemporaneous".
/// Unset or "unknown" items leave the checklist incomplete.
struct ComparabilityChecklist {
  std::optional<std::string> eligibility;
  std::optional<std::string> endpoint_measurement;
  std::optional<std::string> calendar_time;
  std::optional<std::string> treatment_timepoint;
  std::string usual_care;
  std::string center_expertise;
  std::string notes;
};

struct ChecklistReport {
  ChecklistStatus status = ChecklistStatus::Incomplete;
  std::vector<std::string> caveats;
  ComparabilityChecklist items;
};

ComparabilityChecklist parse_checklist(const nlohmann::json& j);
ChecklistReport comparability_checklist(const ComparabilityChecklist& checklist);
nlohmann::json to_json(const ChecklistReport& r);

}  // namespace extctrl
