#pragma once

#include <Eigen/Dense>

namespace extctrl {

enum class GlmFamily { Logistic, Linear };

struct GlmOptions {
  double tol = 1e-8;
  int max_iter = 100;
  /// |coefficient| above this on the logit scale is treated as separation.
  double separation_threshold = 15.0;
};

struct GlmFit {
  GlmFamily family = GlmFamily::Logistic;
  Eigen::VectorXd coefficients;  // intercept first
  bool converged = false;
  int iterations = 0;
  /// -2 log-likelihood for logistic fits, residual sum of squares for linear fits.
  double deviance = 0.0;
  double max_abs_coefficient = 0.0;

  /// Linear predictor X * coefficients.
  Eigen::VectorXd linear_predictor(const Eigen::MatrixXd& X) const { return X * coefficients; }
  /// Mean response on the natural scale (probabilities for logistic fits).
  Eigen::VectorXd fitted(const Eigen::MatrixXd& X) const;
};

double expit(double eta);
double logit(double p);

/// Maximum-likelihood logistic regression by iteratively reweighted least
/// squares. X must carry its own intercept column. Starts from zero and stops
/// one Newton step after the max-norm of the score X'(y - p) drops below tol,
/// or when the Newton step is negligible relative to the coefficients (the
/// score has reached floating-point resolution).
///
/// Throws InsufficientData, ConstantResponse, RankDeficientDesign,
/// SeparationDetected or NoConvergence.
GlmFit fit_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const GlmOptions& options = {});

/// Ordinary least squares via column-pivoted QR.
GlmFit fit_linear(const Eigen::MatrixXd& X, const Eigen::VectorXd& y);

}  // namespace extctrl
