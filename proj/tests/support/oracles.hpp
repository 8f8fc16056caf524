#pragma once

// Reference computations written independently of the library code paths:
// plain loops, Gaussian elimination, enumeration, and quadrature. None of
// these call into Eigen or extctrl numerics.

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <stdexcept>
#include <utility>
#include <vector>

namespace oracle {

using Matrix = std::vector<std::vector<double>>;

/// Solves A x = b by Gaussian elimination with partial pivoting.
inline std::vector<double> solve(Matrix A, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r)
      if (std::abs(A[r][c]) > std::abs(A[piv][c])) piv = r;
    if (A[piv][c] == 0.0) throw std::runtime_error("singular system");
    std::swap(A[c], A[piv]);
    std::swap(b[c], b[piv]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = A[r][c] / A[c][c];
      for (std::size_t k = c; k < n; ++k) A[r][k] -= f * A[c][k];
      b[r] -= f * b[c];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= A[i][k] * x[k];
    x[i] = s / A[i][i];
  }
  return x;
}

/// Least squares through the normal equations X'X b = X'y.
inline std::vector<double> ols(const Matrix& X, const std::vector<double>& y) {
  const std::size_t p = X.front().size();
  Matrix XtX(p, std::vector<double>(p, 0.0));
  std::vector<double> Xty(p, 0.0);
  for (std::size_t i = 0; i < X.size(); ++i)
    for (std::size_t a = 0; a < p; ++a) {
      Xty[a] += X[i][a] * y[i];
      for (std::size_t b = 0; b < p; ++b) XtX[a][b] += X[i][a] * X[i][b];
    }
  return solve(XtX, Xty);
}

inline double expit(double z) { return 1.0 / (1.0 + std::exp(-z)); }

/// Logistic MLE by plain Newton-Raphson on the normal equations, run for a
/// fixed generous number of iterations.
inline std::vector<double> logistic(const Matrix& X, const std::vector<double>& y, int iterations = 60) {
  const std::size_t p = X.front().size();
  std::vector<double> beta(p, 0.0);
  for (int it = 0; it < iterations; ++it) {
    Matrix H(p, std::vector<double>(p, 0.0));
    std::vector<double> g(p, 0.0);
    for (std::size_t i = 0; i < X.size(); ++i) {
      double eta = 0.0;
      for (std::size_t a = 0; a < p; ++a) eta += X[i][a] * beta[a];
      const double pr = expit(eta);
      for (std::size_t a = 0; a < p; ++a) {
        g[a] += X[i][a] * (y[i] - pr);
        for (std::size_t b = 0; b < p; ++b) H[a][b] += pr * (1 - pr) * X[i][a] * X[i][b];
      }
    }
    const auto step = solve(H, g);
    double size = 0.0;
    for (std::size_t a = 0; a < p; ++a) {
      beta[a] += step[a];
      size = std::max(size, std::abs(step[a]));
    }
    if (size < 1e-15) break;
  }
  return beta;
}

/// Sum of w*x over entries with mask true divided by the sum of w.
inline double weighted_mean(const std::vector<double>& x, const std::vector<double>& w, const std::vector<bool>& mask) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!mask[i]) continue;
    num += w[i] * x[i];
    den += w[i];
  }
  return num / den;
}

struct KmPoint {
  double time;
  double survival;
  double at_risk;
  double events;
};

/// Product-limit curve by enumeration: for each distinct event time t, the
/// risk set is every subject with time >= t, and the factor is 1 - d/n.
inline std::vector<KmPoint> kaplan_meier(const std::vector<double>& time, const std::vector<int>& event,
                                         const std::vector<double>& w) {
  std::vector<double> times;
  for (std::size_t i = 0; i < time.size(); ++i)
    if (event[i] && w[i] > 0.0) times.push_back(time[i]);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  std::vector<KmPoint> out;
  double s = 1.0;
  for (double t : times) {
    double n = 0.0, d = 0.0;
    for (std::size_t i = 0; i < time.size(); ++i) {
      if (time[i] >= t) n += w[i];
      if (time[i] == t && event[i]) d += w[i];
    }
    s *= 1.0 - d / n;
    out.push_back({t, s, n, d});
  }
  return out;
}

/// Classical (unit-weight) Kaplan-Meier: counts only.
inline std::vector<KmPoint> kaplan_meier(const std::vector<double>& time, const std::vector<int>& event) {
  return kaplan_meier(time, event, std::vector<double>(time.size(), 1.0));
}

/// Composite Simpson rule on [a, b] with an even number of panels.
inline double simpson(const std::function<double(double)>& f, double a, double b, int panels) {
  if (panels % 2) ++panels;
  const double h = (b - a) / panels;
  double s = f(a) + f(b);
  for (int i = 1; i < panels; ++i) s += f(a + i * h) * (i % 2 ? 4.0 : 2.0);
  return s * h / 3.0;
}

/// Pr(T = 1 | cell) by counting, keyed on the covariate row.
inline std::map<std::vector<double>, double> cell_frequencies(const Matrix& x, const std::vector<int>& t) {
  std::map<std::vector<double>, std::pair<double, double>> counts;
  for (std::size_t i = 0; i < x.size(); ++i) {
    auto& c = counts[x[i]];
    c.first += t[i];
    c.second += 1.0;
  }
  std::map<std::vector<double>, double> out;
  for (const auto& [k, v] : counts) out[k] = v.first / v.second;
  return out;
}

}  // namespace oracle
