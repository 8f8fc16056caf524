#include <atomic>
#include <set>

#include <gtest/gtest.h>

#include <extctrl/analysis.hpp>
#include <extctrl/inference.hpp>

#include "fixtures.hpp"
#include "generators.hpp"

using namespace extctrl;

namespace {

double trial_mean(const Dataset& d) {
  double s = 0.0;
  std::size_t n = 0;
  for (const auto& r : d.records())
    if (r.is_trial()) {
      s += *r.outcome;
      ++n;
    }
  return s / static_cast<double>(n);
}

}  // namespace

TEST(Bootstrap, DegenerateDataGivesZeroWidth) {
  const auto d = parse_dataset("id,group,x,outcome\n1,trial,1,1\n2,trial,1,1\n3,external,1,0\n4,external,1,0\n5,external,1,0\n");
  BootstrapConfig c;
  c.replicates = 50;
  const auto b = bootstrap_ci(d, [](const Dataset& x) { return trial_mean(x); }, c);
  EXPECT_EQ(b.lower, b.upper);
  EXPECT_EQ(b.point, 1.0);
}

TEST(Bootstrap, FixedSeedIsDeterministicAcrossThreadCounts) {
  gen::Rng rng(81);
  const auto d = gen::logistic_confounded(rng, 100, 2);
  BootstrapConfig c;
  c.replicates = 64;
  c.seed = 99;
  c.threads = 1;
  const auto a = bootstrap_ci(d, trial_mean, c);
  c.threads = 4;
  const auto b = bootstrap_ci(d, trial_mean, c);
  const auto again = bootstrap_ci(d, trial_mean, c);
  EXPECT_EQ(a.estimates, b.estimates);
  EXPECT_EQ(a.lower, b.lower);
  EXPECT_EQ(a.upper, again.upper);
  c.seed = 100;
  EXPECT_NE(bootstrap_ci(d, trial_mean, c).estimates, a.estimates);
}

TEST(Bootstrap, RefitsCountedPerSuccessfulReplicate) {
  gen::Rng rng(82);
  const auto d = gen::logistic_confounded(rng, 120, 2);
  std::atomic<int> calls{0};
  BootstrapConfig c;
  c.replicates = 40;
  WeightingOptions o;
  o.covariates = d.covariate_names();
  const auto b = bootstrap_ci(
      d,
      [&](const Dataset& x) {
        ++calls;
        return weighting_estimate(x, o);
      },
      c);
  EXPECT_EQ(b.refits, b.replicates - b.failures);
  EXPECT_EQ(calls.load(), c.replicates + 1);  // replicates plus the point estimate
  EXPECT_LE(b.lower, b.median);
  EXPECT_GE(b.upper, b.median);
}

TEST(Bootstrap, FailuresAreCountedAndCapped) {
  gen::Rng rng(83);
  const auto d = gen::logistic_confounded(rng, 50, 1);
  BootstrapConfig c;
  c.replicates = 100;
  std::atomic<int> k{0};
  const auto some = bootstrap_ci(
      d,
      [&](const Dataset& x) {
        if (++k % 10 == 0) throw Error(ErrorCode::SeparationDetected, "synthetic");
        return trial_mean(x);
      },
      c);
  EXPECT_GT(some.failures, 0);
  EXPECT_EQ(some.failure_fraction, static_cast<double>(some.failures) / c.replicates);

  k = 0;
  EXPECT_ERROR_CODE(bootstrap_ci(
                        d,
                        [&](const Dataset& x) {
                          if (++k > 1 && k % 2 == 0) throw Error(ErrorCode::NoConvergence, "synthetic");
                          return trial_mean(x);
                        },
                        c),
                    TooManyReplicateFailures);
}

TEST(Bootstrap, InvalidConfig) {
  const auto d = fixtures::toy();
  BootstrapConfig c;
  c.replicates = 1;
  EXPECT_ERROR_CODE(bootstrap_ci(d, trial_mean, c), InvalidConfig);
  c.replicates = 10;
  c.level = 1.0;
  EXPECT_ERROR_CODE(bootstrap_ci(d, trial_mean, c), InvalidConfig);
}

TEST(Resampling, PreservesGroupLayout) {
  const auto d = fixtures::toy();
  std::mt19937_64 rng(1);
  for (int rep = 0; rep < 100; ++rep) {
    const auto rows = resample_rows(d, Resampling::StratifiedByGroup, rng);
    ASSERT_EQ(rows.size(), d.size());
    for (std::size_t i = 0; i < rows.size(); ++i)
      EXPECT_EQ(d.records()[rows[i]].group, d.records()[i].group);
    const auto t = resample_rows(d, Resampling::TrialOnly, rng);
    for (std::size_t i = 4; i < 8; ++i) EXPECT_EQ(t[i], i);
  }
}

TEST(Seeds, SubstreamsAreDistinctAndStable) {
  std::set<std::uint64_t> seen;
  for (std::uint64_t i = 0; i < 10000; ++i) seen.insert(substream_seed(42, i));
  EXPECT_EQ(seen.size(), 10000u);
  EXPECT_EQ(substream_seed(42, 7), substream_seed(42, 7));
  EXPECT_EQ(splitmix64(0), 0xE220A8397B1DCDAFULL);
}

TEST(Quantile, TypeSeven) {
  const std::vector<double> v{1, 2, 3, 4};
  EXPECT_EQ(quantile_sorted(v, 0.0), 1.0);
  EXPECT_EQ(quantile_sorted(v, 1.0), 4.0);
  EXPECT_DOUBLE_EQ(quantile_sorted(v, 0.5), 2.5);
  EXPECT_DOUBLE_EQ(quantile_sorted(v, 0.25), 1.75);
}

TEST(Threads, EnvironmentCap) {
  EXPECT_EQ(resolve_threads(3), 3);
  setenv("EXTCTRL_THREADS", "2", 1);
  EXPECT_EQ(resolve_threads(0), 2);
  unsetenv("EXTCTRL_THREADS");
  EXPECT_GE(resolve_threads(0), 1);
}
