#include <random>
#include <vector>

#include <benchmark/benchmark.h>

#include <extctrl/analysis.hpp>
#include <extctrl/simulate.hpp>

using namespace extctrl;

namespace {

ScenarioConfig scenario(int n, int k) {
  ScenarioConfig c;
  c.n_trial = n / 2;
  c.n_external = n - n / 2;
  for (int j = 0; j < k; ++j) {
    c.covariates.push_back({"x" + std::to_string(j + 1), j % 2 ? CovariateType::Binary : CovariateType::Continuous, 0.4});
    c.assignment_coefficients.push_back(j % 2 ? -0.5 : 0.6);
    c.outcome_coefficients.push_back(0.3);
  }
  c.effect = 0.1;
  c.truth_draws = 1000;
  c.seed = 42;
  return c;
}

void BM_LogisticFit(benchmark::State& state) {
  const auto d = generate(scenario(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)))).data;
  for (auto _ : state) benchmark::DoNotOptimize(estimate_propensity(d).scores.data());
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_LogisticFit)->Args({500, 3})->Args({5000, 3})->Args({5000, 10})->Args({50000, 5});

void BM_Maic(benchmark::State& state) {
  const auto d = generate(scenario(static_cast<int>(state.range(0)), 4)).data;
  AggregateSummary target;
  for (const auto& c : d.covariate_names()) {
    target.covariate_names.push_back(c);
    target.covariate_means.push_back(weighted_prevalence(unit_weights(d), d, c).second);
    target.covariate_sds.push_back(std::nullopt);
  }
  target.n = 100;
  target.responders = 40;
  for (auto _ : state) benchmark::DoNotOptimize(maic_weights(d, target, d.covariate_names()).weights.data());
}
BENCHMARK(BM_Maic)->Arg(500)->Arg(5000)->Arg(50000);

void BM_WeightedKm(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(7);
  std::exponential_distribution<double> ex(1.0);
  std::uniform_real_distribution<double> u(0.2, 3.0);
  std::vector<double> t(n), w(n);
  std::vector<int> e(n);
  for (std::size_t i = 0; i < n; ++i) {
    t[i] = ex(rng);
    e[i] = u(rng) < 2.2;
    w[i] = u(rng);
  }
  for (auto _ : state) benchmark::DoNotOptimize(weighted_km(t, e, w).survival.data());
  state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_WeightedKm)->Arg(1000)->Arg(100000);

void BM_Bootstrap(benchmark::State& state) {
  const auto d = generate(scenario(500, 3)).data;
  WeightingOptions o;
  BootstrapConfig c;
  c.replicates = static_cast<int>(state.range(0));
  c.threads = static_cast<int>(state.range(1));
  for (auto _ : state)
    benchmark::DoNotOptimize(bootstrap_ci(d, [&](const Dataset& x) { return weighting_estimate(x, o); }, c).lower);
}
BENCHMARK(BM_Bootstrap)->Args({200, 1})->Args({200, 4})->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
