#include "extctrl/glm.hpp"

#include <cmath>
#include <string>

#include "extctrl/error.hpp"

namespace extctrl {

double expit(double eta) {
  if (eta >= 0.0) return 1.0 / (1.0 + std::exp(-eta));
  const double z = std::exp(eta);
  return z / (1.0 + z);
}

double logit(double p) { return std::log(p / (1.0 - p)); }

Eigen::VectorXd GlmFit::fitted(const Eigen::MatrixXd& X) const {
  Eigen::VectorXd eta = linear_predictor(X);
  if (family == GlmFamily::Linear) return eta;
  return eta.unaryExpr([](double v) { return expit(v); });
}

namespace {

void check_shape(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  if (X.rows() != y.size())
    throw Error(ErrorCode::InsufficientData, "design has " + std::to_string(X.rows()) + " rows but response has " +
                                                 std::to_string(y.size()));
  if (X.cols() == 0) throw Error(ErrorCode::RankDeficientDesign, "design has no columns");
  // n >= p + 2 where X has p + 1 columns
  if (X.rows() < X.cols() + 1)
    throw Error(ErrorCode::InsufficientData, "need at least " + std::to_string(X.cols() + 1) + " observations, got " +
                                                 std::to_string(X.rows()));
  if (!X.allFinite() || !y.allFinite()) throw Error(ErrorCode::InsufficientData, "non-finite input");
}

void check_rank(const Eigen::MatrixXd& X) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  if (qr.rank() < X.cols())
    throw Error(ErrorCode::RankDeficientDesign,
                "design rank " + std::to_string(qr.rank()) + " < " + std::to_string(X.cols()) + " columns");
}

double logistic_deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& eta) {
  // -2 sum[y*eta - log(1 + exp(eta))], evaluated without overflow
  double ll = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double e = eta(i);
    const double log1pexp = e > 0 ? e + std::log1p(std::exp(-e)) : std::log1p(std::exp(e));
    ll += y(i) * e - log1pexp;
  }
  return -2.0 * ll;
}

}  // namespace

GlmFit fit_logistic(const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const GlmOptions& options) {
  check_shape(X, y);
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    if (y(i) != 0.0 && y(i) != 1.0) throw Error(ErrorCode::InsufficientData, "logistic response must be 0/1");
  }
  const double ysum = y.sum();
  if (ysum == 0.0 || ysum == static_cast<double>(y.size()))
    throw Error(ErrorCode::ConstantResponse, "response takes a single value");
  check_rank(X);

  const Eigen::Index n = X.rows();
  GlmFit fit;
  fit.family = GlmFamily::Logistic;
  fit.coefficients = Eigen::VectorXd::Zero(X.cols());

  Eigen::VectorXd eta = Eigen::VectorXd::Zero(n);
  Eigen::VectorXd p(n), sw(n), r(n);
  Eigen::MatrixXd WX(n, X.cols());

  for (int iter = 0; iter <= options.max_iter; ++iter) {
    for (Eigen::Index i = 0; i < n; ++i) p(i) = expit(eta(i));
    const Eigen::VectorXd score = X.transpose() * (y - p);
    fit.iterations = iter;
    // once the score is below tol, one more quadratic step takes the fit to rounding level
    const bool polish = score.lpNorm<Eigen::Infinity>() < options.tol;
    if (!polish && iter == options.max_iter) break;

    // Newton step: solve (sqrt(W) X) delta = (y - p) / sqrt(W) in the least-squares sense
    for (Eigen::Index i = 0; i < n; ++i) {
      const double w = std::max(p(i) * (1.0 - p(i)), 1e-300);
      sw(i) = std::sqrt(w);
      r(i) = (y(i) - p(i)) / sw(i);
    }
    WX = sw.asDiagonal() * X;
    const Eigen::VectorXd delta = WX.colPivHouseholderQr().solve(r);
    if (!delta.allFinite()) throw Error(ErrorCode::NoConvergence, "non-finite Newton step");
    fit.coefficients += delta;

    const double max_abs = fit.coefficients.lpNorm<Eigen::Infinity>();
    if (max_abs > options.separation_threshold)
      throw Error(ErrorCode::SeparationDetected,
                  "coefficient magnitude exceeded " + std::to_string(options.separation_threshold) +
                      " on the logit scale");
    eta = X * fit.coefficients;
    if (polish) {
      fit.converged = true;
      break;
    }

    const double step = delta.lpNorm<Eigen::Infinity>();
    if (step <= 1e-13 * (1.0 + max_abs)) {
      fit.iterations = iter + 1;
      fit.converged = true;
      break;
    }
  }
  if (!fit.converged)
    throw Error(ErrorCode::NoConvergence, "IRLS did not converge in " + std::to_string(options.max_iter) + " iterations");

  fit.deviance = logistic_deviance(y, eta);
  fit.max_abs_coefficient = fit.coefficients.lpNorm<Eigen::Infinity>();
  return fit;
}

GlmFit fit_linear(const Eigen::MatrixXd& X, const Eigen::VectorXd& y) {
  check_shape(X, y);
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  if (qr.rank() < X.cols())
    throw Error(ErrorCode::RankDeficientDesign,
                "design rank " + std::to_string(qr.rank()) + " < " + std::to_string(X.cols()) + " columns");
  GlmFit fit;
  fit.family = GlmFamily::Linear;
  fit.coefficients = qr.solve(y);
  fit.converged = true;
  fit.iterations = 1;
  fit.deviance = (y - X * fit.coefficients).squaredNorm();
  fit.max_abs_coefficient = fit.coefficients.lpNorm<Eigen::Infinity>();
  return fit;
}

}  // namespace extctrl
