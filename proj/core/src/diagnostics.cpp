#include "extctrl/diagnostics.hpp"

#include <cmath>
#include <sstream>

#include "extctrl/error.hpp"
#include "extctrl/json_format.hpp"

namespace extctrl {

namespace {

struct Moments {
  double mean = 0.0;
  double var = 0.0;
  double wsum = 0.0;
};

Moments group_moments(std::span<const double> x, std::span<const double> w, std::span<const Group> g, Group which) {
  Moments m;
  double sx = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (g[i] != which) continue;
    m.wsum += w[i];
    sx += w[i] * x[i];
  }
  if (!(m.wsum > 0.0)) {
    throw Error(ErrorCode::AllWeightsZero,
                std::string(which == Group::Trial ? "trial" : "external") + " group carries no weight");
  }
  m.mean = sx / m.wsum;
  double ss = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (g[i] != which) continue;
    const double d = x[i] - m.mean;
    ss += w[i] * d * d;
  }
  m.var = ss / m.wsum;
  return m;
}

}  // namespace

std::optional<double> standardized_mean_difference(std::span<const double> values, std::span<const double> weights,
                                                   std::span<const Group> groups) {
  const Moments t = group_moments(values, weights, groups, Group::Trial);
  const Moments e = group_moments(values, weights, groups, Group::External);
  const double pooled = 0.5 * (t.var + e.var);
  if (!(pooled > 0.0)) return std::nullopt;
  return (t.mean - e.mean) / std::sqrt(pooled);
}

BalanceTable balance_table(const Dataset& data, const WeightSet& weights, double threshold,
                           const std::vector<std::string>& covariates) {
  if (weights.weights.size() != data.size())
    throw Error(ErrorCode::SchemaViolation, "weights are not aligned with the dataset");
  const auto& names = covariates.empty() ? data.covariate_names() : covariates;
  std::vector<Group> groups;
  groups.reserve(data.size());
  for (const auto& r : data.records()) groups.push_back(r.group);
  const std::vector<double> ones(data.size(), 1.0);

  BalanceTable t;
  t.threshold = threshold;
  t.ess_trial = weights.ess_trial;
  t.ess_external = weights.ess_external;
  for (const auto& name : names) {
    const auto x = data.covariate(name);
    BalanceRow row;
    row.covariate = name;
    const Moments ut = group_moments(x, ones, groups, Group::Trial);
    const Moments ue = group_moments(x, ones, groups, Group::External);
    const Moments wt = group_moments(x, weights.weights, groups, Group::Trial);
    const Moments we = group_moments(x, weights.weights, groups, Group::External);
    row.mean_trial = ut.mean;
    row.mean_external = ue.mean;
    row.weighted_mean_trial = wt.mean;
    row.weighted_mean_external = we.mean;
    row.smd_unweighted = standardized_mean_difference(x, ones, groups);
    row.smd_weighted = standardized_mean_difference(x, weights.weights, groups);
    if (!row.smd_unweighted) t.notes.push_back("ZeroPooledVariance: " + name + " (unweighted)");
    if (!row.smd_weighted) t.notes.push_back("ZeroPooledVariance: " + name + " (weighted)");
    if (row.smd_weighted) t.max_abs_weighted_smd = std::max(t.max_abs_weighted_smd, std::fabs(*row.smd_weighted));
    t.rows.push_back(std::move(row));
  }
  t.imbalance = t.max_abs_weighted_smd > threshold;
  return t;
}

namespace {
nlohmann::json opt(const std::optional<double>& v) { return v ? nlohmann::json(*v) : nlohmann::json(nullptr); }
std::string opt_csv(const std::optional<double>& v) { return v ? format_double(*v) : "NA"; }
}  // namespace

nlohmann::json to_json(const BalanceTable& t) {
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : t.rows) {
    rows.push_back({{"covariate", r.covariate},
                    {"mean_trial", r.mean_trial},
                    {"mean_external", r.mean_external},
                    {"weighted_mean_trial", r.weighted_mean_trial},
                    {"weighted_mean_external", r.weighted_mean_external},
                    {"smd_unweighted", opt(r.smd_unweighted)},
                    {"smd_weighted", opt(r.smd_weighted)}});
  }
  return {{"rows", rows},
          {"ess", {{"trial", t.ess_trial}, {"external", t.ess_external}}},
          {"max_abs_weighted_smd", t.max_abs_weighted_smd},
          {"threshold", t.threshold},
          {"imbalance", t.imbalance},
          {"notes", t.notes}};
}

std::string balance_to_csv(const BalanceTable& t) {
  std::ostringstream out;
  out << "covariate,mean_trial,mean_external,smd_unweighted,weighted_mean_trial,weighted_mean_external,smd_weighted\n";
  for (const auto& r : t.rows) {
    out << r.covariate << ',' << format_double(r.mean_trial) << ',' << format_double(r.mean_external) << ','
        << opt_csv(r.smd_unweighted) << ',' << format_double(r.weighted_mean_trial) << ','
        << format_double(r.weighted_mean_external) << ',' << opt_csv(r.smd_weighted) << '\n';
  }
  return out.str();
}

// ---------------------------------------------------------------------------

std::string to_string(ChecklistStatus s) {
  switch (s) {
    case ChecklistStatus::Pass: return "PASS";
    case ChecklistStatus::Warn: return "WARN";
    case ChecklistStatus::Incomplete: return "INCOMPLETE";
  }
  return "";
}

ComparabilityChecklist parse_checklist(const nlohmann::json& j) {
  ComparabilityChecklist c;
  if (j.is_null()) return c;
  if (!j.is_object()) throw Error(ErrorCode::PlanInvalid, "checklist must be an object");
  auto item = [&](const char* key) -> std::optional<std::string> {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    if (!j.at(key).is_string()) throw Error(ErrorCode::PlanInvalid, std::string("checklist '") + key + "' must be a string");
    return j.at(key).get<std::string>();
  };
  auto text = [&](const char* key) { return item(key).value_or(""); };
  c.eligibility = item("eligibility");
  c.endpoint_measurement = item("endpoint_measurement");
  c.calendar_time = item("calendar_time");
  c.treatment_timepoint = item("treatment_timepoint");
  c.usual_care = text("usual_care");
  c.center_expertise = text("center_expertise");
  c.notes = text("notes");
  for (const auto* v : {&c.eligibility, &c.endpoint_measurement, &c.treatment_timepoint}) {
    if (*v && **v != "aligned" && **v != "misaligned" && **v != "unknown")
      throw Error(ErrorCode::PlanInvalid, "checklist value '" + **v + "' is not aligned/misaligned/unknown");
  }
  if (c.calendar_time && *c.calendar_time != "aligned" && *c.calendar_time != "misaligned" &&
      *c.calendar_time != "non-contemporaneous" && *c.calendar_time != "unknown")
    throw Error(ErrorCode::PlanInvalid, "calendar_time value '" + *c.calendar_time + "' is not recognized");
  return c;
}

ChecklistReport comparability_checklist(const ComparabilityChecklist& c) {
  ChecklistReport r;
  r.items = c;
  bool incomplete = false;
  bool warn = false;
  auto check = [&](const std::optional<std::string>& v, const std::string& caveat) {
    if (!v || *v == "unknown") {
      incomplete = true;
    } else if (*v != "aligned") {
      warn = true;
      r.caveats.push_back(caveat);
    }
  };
  check(c.eligibility,
        "eligibility criteria differ between the trial and the external source; the populations may not be "
        "exchangeable");
  check(c.endpoint_measurement,
        "endpoint definition or assessment schedule differs between sources; outcomes may not be measured alike");
  if (c.calendar_time && *c.calendar_time == "non-contemporaneous") {
    warn = true;
    r.caveats.push_back(
        "external controls are not contemporaneous with the trial; changes in diagnosis and usual care over "
        "calendar time may bias the comparison");
  } else {
    check(c.calendar_time, "calendar periods of the trial and the external source do not match");
  }
  check(c.treatment_timepoint,
        "time zero is not aligned between groups; immortal-time or time-lag bias may be introduced");
  r.status = incomplete ? ChecklistStatus::Incomplete : (warn ? ChecklistStatus::Warn : ChecklistStatus::Pass);
  return r;
}

nlohmann::json to_json(const ChecklistReport& r) {
  auto opt_str = [](const std::optional<std::string>& v) {
    return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
  };
  return {{"status", to_string(r.status)},
          {"caveats", r.caveats},
          {"items",
           {{"eligibility", opt_str(r.items.eligibility)},
            {"endpoint_measurement", opt_str(r.items.endpoint_measurement)},
            {"calendar_time", opt_str(r.items.calendar_time)},
            {"treatment_timepoint", opt_str(r.items.treatment_timepoint)},
            {"usual_care", r.items.usual_care},
            {"center_expertise", r.items.center_expertise},
            {"notes", r.items.notes}}}};
}

}  // namespace extctrl
