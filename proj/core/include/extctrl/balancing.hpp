#pragma once

#include <string>
#include <utility>
#include <vector>

#include "extctrl/dataset.hpp"
#include "extctrl/propensity.hpp"

namespace extctrl {

enum class EstimandKind { ATE, ATT, ATC, ATO, Trimmed, Matching };

/// Target population of a comparison, defined by its tilting function h(e).
class Estimand {
 public:
  static Estimand ate() { return Estimand(EstimandKind::ATE); }
  static Estimand att() { return Estimand(EstimandKind::ATT); }
  static Estimand atc() { return Estimand(EstimandKind::ATC); }
  static Estimand ato() { return Estimand(EstimandKind::ATO); }
  static Estimand matching() { return Estimand(EstimandKind::Matching); }
  /// Requires 0 < a < 0.5; throws ParameterOutOfRange otherwise.
  static Estimand trimmed(double a);
  /// Parses "ate", "att", "atc", "ato", "matching" or "trim:<a>" (case-insensitive).
  static Estimand parse(const std::string& text);

  EstimandKind kind() const { return kind_; }
  double trim_threshold() const { return trim_; }

  /// Short name: ATE, ATT, ATC, ATO, trimmed, matching.
  std::string name() const;
  /// CLI spelling accepted by parse().
  std::string spec() const;
  std::string target_population_label() const;

  friend bool operator==(const Estimand&, const Estimand&) = default;

 private:
  explicit Estimand(EstimandKind k, double trim = 0.0) : kind_(k), trim_(trim) {}
  EstimandKind kind_;
  double trim_;
};

/// Tilting function h(e) for the estimand; e must lie in (0,1).
double tilting(const Estimand& estimand, double e);

/// Weight of one subject: h(e)/e in the trial, h(e)/(1 - e) among external controls.
double balancing_weight(const Estimand& estimand, double e, Group group);

struct WeightSet {
  Estimand estimand = Estimand::ate();
  std::vector<double> weights;  // dataset row order, unnormalized
  double ess_trial = 0.0;
  double ess_external = 0.0;
  std::size_t n_zero_weight = 0;
};

/// (sum w)^2 / sum w^2, or 0 when every weight is zero.
double effective_sample_size(std::span<const double> weights);

WeightSet balancing_weights(const PropensityModel& model, const Dataset& data, const Estimand& estimand);
/// Same as above from raw scores; used when true scores are known.
WeightSet balancing_weights(std::span<const double> scores, const Dataset& data, const Estimand& estimand);
/// Unit weights for every subject (the unadjusted comparison).
WeightSet unit_weights(const Dataset& data);

/// Recomputes ESS and zero counts after weights were edited.
void refresh_summaries(WeightSet& ws, const Dataset& data);

/// Weighted mean of a covariate in each group: (trial, external).
/// Throws AllWeightsZero when a group carries no weight.
std::pair<double, double> weighted_prevalence(const WeightSet& weights, const Dataset& data,
                                              const std::string& covariate);

}  // namespace extctrl
