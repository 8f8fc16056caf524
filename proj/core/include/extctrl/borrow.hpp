#pragma once

#include <span>
#include <vector>

#include <nlohmann/json.hpp>

namespace extctrl {

struct BinomialCounts {
  int responders = 0;
  int n = 0;
};

/// Beta posterior for a response rate when external controls enter the
/// likelihood raised to the power a0 (static power prior).
struct PowerPriorPosterior {
  double a0 = 0.0;
  double prior_alpha = 1.0;
  double prior_beta = 1.0;
  double posterior_alpha = 1.0;
  double posterior_beta = 1.0;
  /// a0 * n0, the number of external subjects effectively borrowed.
  double effective_prior_n = 0.0;

  double mean() const { return posterior_alpha / (posterior_alpha + posterior_beta); }
};

struct PosteriorSummary {
  double mean = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.95;
};

/// Conjugate update: alpha + x + a0 x0, beta + (n - x) + a0 (n0 - x0).
/// Throws ParameterOutOfRange on invalid counts, a0 outside [0,1] or a
/// non-positive prior.
PowerPriorPosterior power_prior_posterior(BinomialCounts trial, BinomialCounts external, double a0,
                                          double prior_alpha = 1.0, double prior_beta = 1.0);

/// Posterior mean and equal-tailed credible interval.
PosteriorSummary summarize(const PowerPriorPosterior& post, double level = 0.95);

struct SweepPoint {
  PowerPriorPosterior posterior;
  PosteriorSummary summary;
};

/// Sensitivity analysis over a grid of discount values.
std::vector<SweepPoint> power_prior_sweep(BinomialCounts trial, BinomialCounts external, std::span<const double> a0_grid,
                                          double prior_alpha = 1.0, double prior_beta = 1.0, double level = 0.95);

nlohmann::json to_json(const PowerPriorPosterior& p, const PosteriorSummary& s);

// Beta distribution helpers.
double log_beta_function(double a, double b);
double beta_pdf(double x, double a, double b);
/// Regularized incomplete beta I_x(a, b) by continued fraction.
double regularized_incomplete_beta(double x, double a, double b);
/// Inverse of I_x(a, b) in x by bisection; |I_x - p| <= 1e-12 or x resolved to machine precision.
double beta_quantile(double p, double a, double b);

}  // namespace extctrl
