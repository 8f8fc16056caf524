#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "extctrl/dataset.hpp"

namespace extctrl {

enum class Resampling {
  /// Resample with replacement within each group, keeping group sizes.
  StratifiedByGroup,
  /// Resample trial rows only; external rows (or aggregates) stay fixed.
  TrialOnly,
};

std::string to_string(Resampling r);

struct BootstrapConfig {
  int replicates = 1000;
  double level = 0.95;
  std::uint64_t seed = 0;
  Resampling resampling = Resampling::StratifiedByGroup;
  /// Worker threads; 0 reads EXTCTRL_THREADS and falls back to the hardware count.
  int threads = 0;
  /// Fail when a larger share of replicates throws.
  double max_failure_fraction = 0.2;
};

struct BootstrapResult {
  double point = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double level = 0.95;
  int replicates = 0;
  int failures = 0;
  double failure_fraction = 0.0;
  /// Successful pipeline re-runs, i.e. model re-fits; equals replicates - failures.
  int refits = 0;
  double median = 0.0;
  /// Replicate estimates in replicate-index order; NaN marks a failure.
  std::vector<double> estimates;
};

/// A full analysis from data to a scalar estimate. Every replicate calls it
/// afresh, so models fitted inside are re-estimated per replicate.
using Pipeline = std::function<double(const Dataset&)>;

/// Percentile bootstrap. Replicate r draws from a generator seeded with
/// substream_seed(config.seed, r), so the result does not depend on the
/// number of threads. Failed replicates (extctrl::Error or non-finite
/// output) are skipped; more than max_failure_fraction of them throws
/// TooManyReplicateFailures.
BootstrapResult bootstrap_ci(const Dataset& data, const Pipeline& pipeline, const BootstrapConfig& config);

/// SplitMix64 finalizer.
std::uint64_t splitmix64(std::uint64_t x);
/// Seed of replicate `index`: splitmix64(root ^ splitmix64(index + 0x9E3779B97F4A7C15)).
std::uint64_t substream_seed(std::uint64_t root, std::uint64_t index);

/// Row indices of one bootstrap sample, aligned with the original row layout.
std::vector<std::size_t> resample_rows(const Dataset& data, Resampling mode, std::mt19937_64& rng);

/// Linear-interpolation quantile (type 7) of sorted values.
double quantile_sorted(const std::vector<double>& sorted, double q);

/// Number of worker threads for a request (see BootstrapConfig::threads).
int resolve_threads(int requested);

/// Calls fn(i) for i in [0, n) on up to `threads` workers. Exceptions from fn
/// are rethrown on the calling thread (the first by index).
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn);

}  // namespace extctrl
