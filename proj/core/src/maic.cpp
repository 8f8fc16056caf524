#include "extctrl/maic.hpp"

#include <algorithm>
#include <cmath>

#include "extctrl/balancing.hpp"
#include "extctrl/error.hpp"

namespace extctrl {

namespace {

struct Objective {
  double value;
  Eigen::VectorXd weights;
};

Objective evaluate(const Eigen::MatrixXd& Xc, const Eigen::VectorXd& alpha) {
  Objective o;
  o.weights = (Xc * alpha).array().exp().matrix();
  o.value = o.weights.sum();
  return o;
}

}  // namespace

namespace {

// One undamped Newton step near the optimum, kept only if it shrinks the
// moment gap further.
void polish(const Eigen::MatrixXd& Xc, Eigen::VectorXd& alpha, Objective& cur, const Eigen::VectorXd& grad, double gap,
            std::vector<double>& trace) {
  const Eigen::MatrixXd H = Xc.transpose() * cur.weights.asDiagonal() * Xc;
  Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
  if (ldlt.info() != Eigen::Success) return;
  const Eigen::VectorXd next = alpha - ldlt.solve(grad);
  Objective obj = evaluate(Xc, next);
  if (!std::isfinite(obj.value)) return;
  if ((Xc.transpose() * obj.weights / obj.value).lpNorm<Eigen::Infinity>() < gap) {
    alpha = next;
    cur = std::move(obj);
    trace.push_back(cur.value);
  }
}

}  // namespace

MaicFit maic_weights(const Dataset& data, const AggregateSummary& target, const std::vector<std::string>& covariates,
                     const MaicOptions& options) {
  if (covariates.empty()) throw Error(ErrorCode::InvalidConfig, "MAIC needs at least one covariate");
  const Dataset trial = data.has_external() ? data.subset(Group::Trial) : data;
  const auto n = static_cast<Eigen::Index>(trial.size());

  MaicFit fit;
  fit.matched_covariates = covariates;

  // moment columns: x - m, optionally (x - m)^2 - s^2
  std::vector<Eigen::VectorXd> cols;
  std::vector<std::string> labels;
  for (const auto& name : covariates) {
    const double m = target.mean_of(name);
    fit.target_means.push_back(m);
    const auto values = trial.covariate(name);
    Eigen::VectorXd c(n);
    for (Eigen::Index i = 0; i < n; ++i) c(i) = values[static_cast<std::size_t>(i)] - m;
    cols.push_back(c);
    labels.push_back(name);
  }
  if (options.match_variance) {
    for (const auto& name : covariates) {
      const auto sd = target.sd_of(name);
      if (!sd) throw Error(ErrorCode::SchemaViolation, "variance matching needs an sd for '" + name + "'");
      const double m = target.mean_of(name);
      const auto values = trial.covariate(name);
      Eigen::VectorXd c(n);
      for (Eigen::Index i = 0; i < n; ++i) {
        const double d = values[static_cast<std::size_t>(i)] - m;
        c(i) = d * d - *sd * *sd;
      }
      cols.push_back(c);
      labels.push_back(name + "^2");
    }
  }

  const auto k = static_cast<Eigen::Index>(cols.size());
  Eigen::MatrixXd Xc(n, k);
  for (Eigen::Index j = 0; j < k; ++j) Xc.col(j) = cols[static_cast<std::size_t>(j)];

  for (Eigen::Index j = 0; j < k; ++j) {
    if (!(Xc.col(j).minCoeff() < 0.0 && Xc.col(j).maxCoeff() > 0.0))
      throw Error(ErrorCode::TargetOutsideSupport,
                  "target for '" + labels[static_cast<std::size_t>(j)] + "' is not strictly inside the trial range");
  }
  if (Eigen::ColPivHouseholderQR<Eigen::MatrixXd>(Xc).rank() < k)
    throw Error(ErrorCode::CollinearCovariates, "matched covariates are linearly dependent");

  Eigen::VectorXd alpha = Eigen::VectorXd::Zero(k);
  Objective cur = evaluate(Xc, alpha);
  fit.objective_trace.push_back(cur.value);

  for (int iter = 0; iter <= options.max_iter; ++iter) {
    const Eigen::VectorXd grad = Xc.transpose() * cur.weights;
    fit.iterations = iter;
    const double gap = (grad / cur.value).lpNorm<Eigen::Infinity>();
    if (gap < options.tol) {
      fit.converged = true;
      polish(Xc, alpha, cur, grad, gap, fit.objective_trace);
      break;
    }
    if (iter == options.max_iter) break;
    if (cur.value < 1e-12 * static_cast<double>(n))
      throw Error(ErrorCode::TargetOutsideSupport, "weights collapse; target is outside the trial covariate hull");

    const Eigen::MatrixXd H = Xc.transpose() * cur.weights.asDiagonal() * Xc;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(H);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
      throw Error(ErrorCode::CollinearCovariates, "singular Hessian in MAIC solver");
    const Eigen::VectorXd step = -ldlt.solve(grad);

    // step halving until the objective does not increase
    double t = 1.0;
    bool accepted = false;
    for (int h = 0; h < 60; ++h, t *= 0.5) {
      Objective trial_obj = evaluate(Xc, alpha + t * step);
      if (std::isfinite(trial_obj.value) && trial_obj.value <= cur.value) {
        alpha += t * step;
        cur = std::move(trial_obj);
        accepted = true;
        break;
      }
    }
    if (!accepted) throw Error(ErrorCode::NoConvergence, "MAIC line search failed to decrease the objective");
    fit.objective_trace.push_back(cur.value);
  }
  if (!fit.converged)
    throw Error(ErrorCode::NoConvergence,
                "MAIC solver did not converge in " + std::to_string(options.max_iter) + " iterations");

  fit.alpha = alpha;
  fit.weights.assign(cur.weights.data(), cur.weights.data() + n);
  fit.ess = effective_sample_size(fit.weights);
  for (const auto& name : covariates) {
    const auto values = trial.covariate(name);
    double num = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) num += fit.weights[i] * values[i];
    fit.achieved_means.push_back(num / cur.value);
  }
  return fit;
}

EffectReport maic_compare(const MaicFit& fit, const Dataset& data, const AggregateSummary& target, Scale scale,
                          const MaicCompareOptions& options) {
  if (!fit.converged) throw Error(ErrorCode::NoConvergence, "MAIC fit did not converge");
  const Dataset trial = data.has_external() ? data.subset(Group::Trial) : data;
  if (fit.weights.size() != trial.size())
    throw Error(ErrorCode::SchemaViolation, "MAIC weights are not aligned with the trial data");
  if (trial.outcome_kind() != target.outcome_kind)
    throw Error(ErrorCode::ScaleIncompatibleWithOutcome, "trial outcome is " + to_string(trial.outcome_kind()) +
                                                             " but the aggregate outcome is " +
                                                             to_string(target.outcome_kind));
  check_scale(trial.outcome_kind(), scale);

  EffectReport r;
  r.method = "maic";
  r.estimand = "ATC";
  r.target_population = "external control population (ATC)";
  r.scale = scale;
  r.ess_trial = fit.ess;
  r.warnings.push_back(
      "unanchored comparison: assumes conditional constancy of absolute effects, i.e. every prognostic factor "
      "and effect modifier is among the matched covariates");
  r.warnings.push_back("the external aggregate outcome is treated as a fixed constant; its sampling error is ignored");

  double p1 = 0.0;
  double p0 = target.outcome_value();
  if (trial.outcome_kind() == OutcomeKind::TimeToEvent) {
    const auto curve = weighted_km(trial, fit.weights, Group::Trial);
    p1 = curve.survival_at(*target.horizon);
    r.diagnostics["horizon"] = *target.horizon;
    r.diagnostics["horizon_beyond_follow_up"] = *target.horizon > curve.last_time;
  } else {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < trial.size(); ++i) {
      const auto& rec = trial.records()[i];
      if (!rec.outcome) throw Error(ErrorCode::MissingValue, "subject '" + rec.id + "' has no outcome");
      num += fit.weights[i] * *rec.outcome;
      den += fit.weights[i];
    }
    p1 = num / den;
  }

  if (trial.outcome_kind() == OutcomeKind::Binary && options.continuity_correction) {
    const double n1 = static_cast<double>(trial.size());
    const double n0 = target.n;
    const bool zero_cell = p1 == 0.0 || p1 == 1.0 || p0 == 0.0 || p0 == 1.0;
    if (zero_cell) {
      p1 = (p1 * n1 + 0.5) / (n1 + 1.0);
      p0 = (p0 * n0 + 0.5) / (n0 + 1.0);
      r.warnings.push_back("continuity correction of 0.5 per cell applied");
    }
  }

  const auto c = contrast(p1, p0, scale);
  r.estimate = c.value;
  r.status = c.status;
  if (!c.finite()) r.warnings.push_back("InfiniteContrast: " + scale_label(scale) + " has a zero cell");
  r.trial_value = p1;
  r.external_value = p0;

  nlohmann::json cov = nlohmann::json::array();
  for (std::size_t j = 0; j < fit.matched_covariates.size(); ++j)
    cov.push_back({{"name", fit.matched_covariates[j]},
                   {"target", fit.target_means[j]},
                   {"achieved", fit.achieved_means[j]},
                   {"alpha", fit.alpha(static_cast<Eigen::Index>(j))}});
  r.diagnostics["matched_covariates"] = cov;
  r.diagnostics["iterations"] = fit.iterations;
  r.diagnostics["ess"] = fit.ess;
  r.diagnostics["n_trial"] = trial.size();
  return r;
}

}  // namespace extctrl
