#include "extctrl/borrow.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "extctrl/error.hpp"

namespace extctrl {

double log_beta_function(double a, double b) { return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b); }

double beta_pdf(double x, double a, double b) {
  if (x <= 0.0 || x >= 1.0) return 0.0;
  return std::exp((a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x) - log_beta_function(a, b));
}

namespace {

// Modified Lentz evaluation of the continued fraction for I_x(a, b).
double beta_continued_fraction(double x, double a, double b) {
  constexpr double tiny = 1e-300;
  constexpr double eps = 1e-16;
  const double qab = a + b, qap = a + 1.0, qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::fabs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= 10000; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::fabs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::fabs(del - 1.0) < eps) break;
  }
  return h;
}

}  // namespace

double regularized_incomplete_beta(double x, double a, double b) {
  if (x <= 0.0) return 0.0;
  if (x >= 1.0) return 1.0;
  const double log_front = a * std::log(x) + b * std::log1p(-x) - log_beta_function(a, b);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(x, a, b) / a;
  return 1.0 - front * beta_continued_fraction(1.0 - x, b, a) / b;
}

double beta_quantile(double p, double a, double b) {
  if (p <= 0.0) return 0.0;
  if (p >= 1.0) return 1.0;
  double lo = 0.0, hi = 1.0;
  double mid = 0.5;
  for (int it = 0; it < 200; ++it) {
    mid = 0.5 * (lo + hi);
    const double f = regularized_incomplete_beta(mid, a, b) - p;
    if (std::fabs(f) <= 1e-12) break;
    if (f < 0.0)
      lo = mid;
    else
      hi = mid;
    if (hi - lo <= std::numeric_limits<double>::epsilon() * hi) break;
  }
  return mid;
}

PowerPriorPosterior power_prior_posterior(BinomialCounts trial, BinomialCounts external, double a0, double prior_alpha,
                                          double prior_beta) {
  if (trial.n < 0 || trial.responders < 0 || trial.responders > trial.n)
    throw Error(ErrorCode::ParameterOutOfRange, "trial counts need 0 <= x <= n");
  if (external.n < 0 || external.responders < 0 || external.responders > external.n)
    throw Error(ErrorCode::ParameterOutOfRange, "external counts need 0 <= x0 <= n0");
  if (!(a0 >= 0.0 && a0 <= 1.0)) throw Error(ErrorCode::ParameterOutOfRange, "a0 must lie in [0, 1]");
  if (!(prior_alpha > 0.0 && prior_beta > 0.0) || !std::isfinite(prior_alpha) || !std::isfinite(prior_beta))
    throw Error(ErrorCode::ParameterOutOfRange, "Beta prior parameters must be positive");

  PowerPriorPosterior p;
  p.a0 = a0;
  p.prior_alpha = prior_alpha;
  p.prior_beta = prior_beta;
  p.posterior_alpha = prior_alpha + trial.responders + a0 * external.responders;
  p.posterior_beta = prior_beta + (trial.n - trial.responders) + a0 * (external.n - external.responders);
  p.effective_prior_n = a0 * external.n;
  return p;
}

PosteriorSummary summarize(const PowerPriorPosterior& post, double level) {
  if (!(level > 0.0 && level < 1.0)) throw Error(ErrorCode::ParameterOutOfRange, "level must lie in (0, 1)");
  PosteriorSummary s;
  s.level = level;
  s.mean = post.mean();
  const double tail = 0.5 * (1.0 - level);
  s.lower = beta_quantile(tail, post.posterior_alpha, post.posterior_beta);
  s.upper = beta_quantile(1.0 - tail, post.posterior_alpha, post.posterior_beta);
  return s;
}

std::vector<SweepPoint> power_prior_sweep(BinomialCounts trial, BinomialCounts external, std::span<const double> a0_grid,
                                          double prior_alpha, double prior_beta, double level) {
  std::vector<SweepPoint> out;
  out.reserve(a0_grid.size());
  for (double a0 : a0_grid) {
    auto post = power_prior_posterior(trial, external, a0, prior_alpha, prior_beta);
    out.push_back({post, summarize(post, level)});
  }
  return out;
}

nlohmann::json to_json(const PowerPriorPosterior& p, const PosteriorSummary& s) {
  return {{"a0", p.a0},
          {"prior", {{"alpha", p.prior_alpha}, {"beta", p.prior_beta}}},
          {"posterior", {{"alpha", p.posterior_alpha}, {"beta", p.posterior_beta}}},
          {"effective_prior_n", p.effective_prior_n},
          {"mean", s.mean},
          {"credible_interval", {{"lower", s.lower}, {"upper", s.upper}, {"level", s.level}}}};
}

}  // namespace extctrl
