#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "extctrl/dataset.hpp"
#include "extctrl/estimators.hpp"

namespace extctrl {

struct MaicOptions {
  /// Stop when every weighted mean is within tol of its target.
  double tol = 1e-8;
  int max_iter = 200;
  /// Also match target variances; requires standard deviations in the summary.
  bool match_variance = false;
};

struct MaicFit {
  Eigen::VectorXd alpha;
  /// One positive weight per trial subject, in trial row order.
  std::vector<double> weights;
  std::vector<std::string> matched_covariates;
  std::vector<double> achieved_means;
  std::vector<double> target_means;
  double ess = 0.0;
  bool converged = false;
  int iterations = 0;
  /// Value of sum_i exp(x_i' alpha) after each accepted step, starting at alpha = 0.
  std::vector<double> objective_trace;
};

/// Exponential-tilt weights w_i = exp(x_i' alpha), x_i centered at the target
/// means, chosen so the weighted trial means equal the aggregate means. Solved
/// by damped Newton descent on sum_i exp(x_i' alpha) from alpha = 0.
///
/// Only trial rows of `data` are used. Throws TargetOutsideSupport when a
/// target is not strictly inside the trial range, CollinearCovariates, or
/// NoConvergence.
MaicFit maic_weights(const Dataset& data, const AggregateSummary& target, const std::vector<std::string>& covariates,
                     const MaicOptions& options = {});

struct MaicCompareOptions {
  /// Replace zero cells with (x + 0.5)/(n + 1) on both sides.
  bool continuity_correction = false;
};

/// Contrasts the MAIC-weighted trial outcome with the aggregate external
/// outcome. Zero-cell ratio contrasts come back with status Infinite or
/// Undefined rather than throwing.
EffectReport maic_compare(const MaicFit& fit, const Dataset& data, const AggregateSummary& target, Scale scale,
                          const MaicCompareOptions& options = {});

}  // namespace extctrl
