#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace extctrl {

/// Trial = single-arm treated group (T=1), External = external controls (T=0).
enum class Group { Trial, External };

enum class OutcomeKind { Binary, Continuous, TimeToEvent };

std::string to_string(Group g);
std::string to_string(OutcomeKind k);
OutcomeKind parse_outcome_kind(const std::string& s);

struct PatientRecord {
  std::string id;
  Group group = Group::Trial;
  std::vector<double> covariates;
  std::optional<double> outcome;
  std::optional<double> time;
  std::optional<bool> event;

  bool is_trial() const { return group == Group::Trial; }
  friend bool operator==(const PatientRecord&, const PatientRecord&) = default;
};

/// Individual-level data for the trial and, when available, external controls.
/// Row order is the canonical subject order for every per-subject vector
/// computed downstream (scores, weights).
class Dataset {
 public:
  Dataset(std::vector<std::string> covariate_names, std::vector<PatientRecord> records,
          OutcomeKind outcome_kind);

  const std::vector<std::string>& covariate_names() const { return covariate_names_; }
  const std::vector<PatientRecord>& records() const { return records_; }
  OutcomeKind outcome_kind() const { return outcome_kind_; }

  std::size_t size() const { return records_.size(); }
  std::size_t n_trial() const { return n_trial_; }
  std::size_t n_external() const { return records_.size() - n_trial_; }
  bool has_external() const { return n_external() > 0; }

  /// Column index of a covariate; throws UnknownCovariate.
  std::size_t covariate_index(const std::string& name) const;
  /// Values of one covariate in row order.
  std::vector<double> covariate(const std::string& name) const;
  /// Design matrix with a leading intercept column followed by the named covariates.
  Eigen::MatrixXd design_matrix(std::span<const std::string> names) const;
  /// 1 for trial rows, 0 for external rows.
  Eigen::VectorXd trial_indicator() const;

  /// Records of one group only, in original order.
  Dataset subset(Group g) const;
  /// Rows picked by index (duplicates allowed); used by resampling.
  Dataset select(std::span<const std::size_t> rows) const;

  friend bool operator==(const Dataset&, const Dataset&) = default;

 private:
  std::vector<std::string> covariate_names_;
  std::vector<PatientRecord> records_;
  OutcomeKind outcome_kind_;
  std::size_t n_trial_ = 0;
};

/// Column-role mapping for CSV ingestion. An empty covariate list means
/// "every column that is not id/group/outcome/time/event".
struct CsvSchema {
  std::string id_column = "id";
  std::string group_column = "group";
  std::vector<std::string> covariates;
  std::string outcome_column = "outcome";
  std::string time_column = "time";
  std::string event_column = "event";
  /// When unset: TimeToEvent if time/event columns exist, Binary if every
  /// outcome is 0/1, Continuous otherwise.
  std::optional<OutcomeKind> outcome_kind;
  /// Require at least one external row.
  bool require_external = false;
};

Dataset load_dataset(const std::filesystem::path& path, const CsvSchema& schema = {});
Dataset parse_dataset(std::string_view csv_text, const CsvSchema& schema = {});
void write_dataset(const Dataset& data, const std::filesystem::path& path);
std::string dataset_to_csv(const Dataset& data);

/// Published-only summary of an external population.
struct AggregateSummary {
  std::vector<std::string> covariate_names;
  std::vector<double> covariate_means;
  /// Optional standard deviations, needed only for variance matching in MAIC.
  std::vector<std::optional<double>> covariate_sds;
  int n = 0;
  OutcomeKind outcome_kind = OutcomeKind::Binary;
  // Binary
  std::optional<int> responders;
  // Continuous
  std::optional<double> outcome_mean;
  std::optional<double> outcome_sd;
  // TimeToEvent
  std::optional<double> survival;
  std::optional<double> horizon;

  /// Mean of a covariate by name; throws UnknownCovariate.
  double mean_of(const std::string& name) const;
  std::optional<double> sd_of(const std::string& name) const;
  /// Outcome on its natural scale: response proportion, mean, or survival.
  double outcome_value() const;
};

/// JSON schema:
///   {"n": int,
///    "covariates": {"name": number | {"mean": x, "sd": s} | {"proportion": p}, ...},
///    "outcome": {"kind": "binary", "responders": int}
///             | {"kind": "continuous", "mean": x, "sd": s}
///             | {"kind": "survival", "survival": p, "horizon": t}}
/// Proportions (and survival probabilities) must lie in [0,1].
AggregateSummary load_aggregate(const std::filesystem::path& path);
AggregateSummary parse_aggregate(const nlohmann::json& j);

}  // namespace extctrl
