#include <cmath>

#include <gtest/gtest.h>

#include <extctrl/glm.hpp>

#include "fixtures.hpp"
#include "generators.hpp"
#include "oracles.hpp"

using namespace extctrl;

namespace {

oracle::Matrix rows_of(const Eigen::MatrixXd& X) {
  oracle::Matrix out(static_cast<std::size_t>(X.rows()));
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index j = 0; j < X.cols(); ++j) out[static_cast<std::size_t>(i)].push_back(X(i, j));
  return out;
}

std::vector<double> vec_of(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

TEST(Logistic, SaturatedBinaryModelReproducesCellFrequencies) {
  const auto d = fixtures::toy();
  const std::vector<std::string> cov{"severe"};
  const auto X = d.design_matrix(cov);
  const auto y = d.trial_indicator();
  const auto fit = fit_logistic(X, y);
  ASSERT_TRUE(fit.converged);
  EXPECT_NEAR(fit.coefficients(0), std::log(3.0), 1e-12);
  EXPECT_NEAR(fit.coefficients(1), -2.0 * std::log(3.0), 1e-12);

  std::vector<int> t;
  for (Eigen::Index i = 0; i < y.size(); ++i) t.push_back(static_cast<int>(y(i)));
  oracle::Matrix cells;
  for (double s : d.covariate("severe")) cells.push_back({s});
  const auto freq = oracle::cell_frequencies(cells, t);
  const auto p = fit.fitted(X);
  for (Eigen::Index i = 0; i < p.size(); ++i) EXPECT_NEAR(p(i), freq.at(cells[static_cast<std::size_t>(i)]), 1e-12);
}

TEST(Logistic, ConstantResponse) {
  Eigen::MatrixXd X(4, 2);
  X << 1, 0, 1, 1, 1, 2, 1, 3;
  EXPECT_ERROR_CODE(fit_logistic(X, Eigen::VectorXd::Ones(4)), ConstantResponse);
}

TEST(Logistic, SeparationDetected) {
  Eigen::MatrixXd X(6, 2);
  Eigen::VectorXd y(6);
  for (int i = 0; i < 6; ++i) {
    y(i) = i < 3 ? 0.0 : 1.0;
    X(i, 0) = 1.0;
    X(i, 1) = y(i);
  }
  EXPECT_ERROR_CODE(fit_logistic(X, y), SeparationDetected);
}

TEST(Logistic, RankDeficientDesign) {
  Eigen::MatrixXd X(5, 3);
  Eigen::VectorXd y(5);
  for (int i = 0; i < 5; ++i) {
    X(i, 0) = 1;
    X(i, 1) = i;
    X(i, 2) = 2.0 * i;
    y(i) = i % 2;
  }
  EXPECT_ERROR_CODE(fit_logistic(X, y), RankDeficientDesign);
}

TEST(Logistic, TooFewRows) {
  Eigen::MatrixXd X(2, 2);
  X << 1, 0, 1, 1;
  Eigen::VectorXd y(2);
  y << 0, 1;
  EXPECT_ERROR_CODE(fit_logistic(X, y), InsufficientData);
}

TEST(Logistic, IterationCapGivesNoConvergence) {
  gen::Rng rng(3);
  const auto d = gen::logistic_confounded(rng, 200, 3);
  GlmOptions o;
  o.max_iter = 1;
  EXPECT_ERROR_CODE(fit_logistic(d.design_matrix(d.covariate_names()), d.trial_indicator(), o), NoConvergence);
}

TEST(LogisticProperty, MatchesNewtonOracleAndSolvesScoreEquations) {
  gen::Rng rng(11);
  for (int rep = 0; rep < 30; ++rep) {
    const auto d = gen::logistic_confounded(rng, 80 + rep * 5, 3);
    const auto X = d.design_matrix(d.covariate_names());
    const auto y = d.trial_indicator();
    const auto fit = fit_logistic(X, y);
    const auto ref = oracle::logistic(rows_of(X), vec_of(y));
    for (std::size_t j = 0; j < ref.size(); ++j) EXPECT_NEAR(fit.coefficients(static_cast<Eigen::Index>(j)), ref[j], 1e-8);
    const Eigen::VectorXd score = X.transpose() * (y - fit.fitted(X));
    EXPECT_LT(score.lpNorm<Eigen::Infinity>(), 1e-8 * static_cast<double>(X.rows()));
    EXPECT_LE(fit.iterations, GlmOptions{}.max_iter);
  }
}

TEST(LogisticProperty, InterceptOnlyFitsSampleMean) {
  gen::Rng rng(5);
  for (int rep = 0; rep < 20; ++rep) {
    const int n = rng.integer(5, 60);
    Eigen::MatrixXd X = Eigen::MatrixXd::Ones(n, 1);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) y(i) = i == 0 ? 1.0 : i == 1 ? 0.0 : (rng.bernoulli(0.3) ? 1.0 : 0.0);
    const auto fit = fit_logistic(X, y);
    EXPECT_NEAR(fit.fitted(X)(0), y.mean(), 1e-12);
  }
}

TEST(Linear, ExactLine) {
  Eigen::MatrixXd X(4, 2);
  Eigen::VectorXd y(4);
  for (int i = 0; i < 4; ++i) {
    X(i, 0) = 1;
    X(i, 1) = i * 1.5 - 2;
    y(i) = 2 * X(i, 1) + 1;
  }
  const auto fit = fit_linear(X, y);
  EXPECT_NEAR(fit.coefficients(0), 1.0, 1e-12);
  EXPECT_NEAR(fit.coefficients(1), 2.0, 1e-12);
  EXPECT_NEAR(fit.deviance, 0.0, 1e-20);
}

TEST(Linear, ConstantResponseGivesInterceptOnly) {
  Eigen::MatrixXd X(3, 2);
  X << 1, 0, 1, 1, 1, 5;
  const auto fit = fit_linear(X, Eigen::VectorXd::Constant(3, 4.25));
  EXPECT_NEAR(fit.coefficients(0), 4.25, 1e-12);
  EXPECT_NEAR(fit.coefficients(1), 0.0, 1e-12);
}

TEST(Linear, RankDeficient) {
  Eigen::MatrixXd X(5, 3);
  X << 1, 1, 2, 1, 2, 4, 1, 3, 6, 1, 4, 8, 1, 5, 10;
  EXPECT_ERROR_CODE(fit_linear(X, Eigen::VectorXd::Ones(5)), RankDeficientDesign);
}

TEST(LinearProperty, MatchesNormalEquationsAndResidualsAreOrthogonal) {
  gen::Rng rng(21);
  for (int rep = 0; rep < 30; ++rep) {
    Eigen::MatrixXd X(20, 4);
    Eigen::VectorXd y(20);
    for (int i = 0; i < 20; ++i) {
      X(i, 0) = 1;
      for (int j = 1; j < 4; ++j) X(i, j) = rng.normal(0, 2);
      y(i) = rng.normal(0, 3) + X(i, 1);
    }
    const auto fit = fit_linear(X, y);
    const auto ref = oracle::ols(rows_of(X), vec_of(y));
    for (int j = 0; j < 4; ++j) EXPECT_NEAR(fit.coefficients(j), ref[static_cast<std::size_t>(j)], 1e-10);
    const Eigen::VectorXd r = y - X * fit.coefficients;
    EXPECT_LT((X.transpose() * r).lpNorm<Eigen::Infinity>(), 1e-8);
  }
}

TEST(Linear, IllConditionedDesignStaysAccurate) {
  // columns nearly collinear: condition number around 1e8
  Eigen::MatrixXd X(30, 3);
  Eigen::VectorXd y(30);
  for (int i = 0; i < 30; ++i) {
    const double t = i / 29.0;
    X(i, 0) = 1;
    X(i, 1) = t;
    X(i, 2) = t + 1e-7 * std::sin(10.0 * i);
    y(i) = 1.0 + 2.0 * X(i, 1) + 3.0 * X(i, 2);
  }
  const auto fit = fit_linear(X, y);
  ASSERT_TRUE(fit.coefficients.allFinite());
  EXPECT_NEAR(fit.coefficients(0), 1.0, 1e-5);
  EXPECT_NEAR(fit.coefficients(1), 2.0, 1e-3);
  EXPECT_NEAR(fit.coefficients(2), 3.0, 1e-3);
}
