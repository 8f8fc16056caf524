#include "extctrl/inference.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <limits>
#include <thread>

#include "extctrl/error.hpp"

namespace extctrl {

std::string to_string(Resampling r) {
  return r == Resampling::StratifiedByGroup ? "stratified_by_group" : "trial_only";
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t substream_seed(std::uint64_t root, std::uint64_t index) {
  return splitmix64(root ^ splitmix64(index + 0x9E3779B97F4A7C15ULL));
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("EXTCTRL_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw ? static_cast<int>(hw) : 1;
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& fn) {
  const auto workers = static_cast<std::size_t>(std::max(1, std::min<int>(resolve_threads(threads),
                                                                          static_cast<int>(std::max<std::size_t>(n, 1)))));
  std::vector<std::exception_ptr> errors(n);
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < n; i = next++) {
          try {
            fn(i);
          } catch (...) {
            errors[i] = std::current_exception();
          }
        }
      });
    }
    for (auto& t : pool) t.join();
  }
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

std::vector<std::size_t> resample_rows(const Dataset& data, Resampling mode, std::mt19937_64& rng) {
  std::vector<std::size_t> trial, external;
  for (std::size_t i = 0; i < data.size(); ++i) (data.records()[i].is_trial() ? trial : external).push_back(i);
  std::uniform_int_distribution<std::size_t> pick_trial(0, trial.size() - 1);
  std::uniform_int_distribution<std::size_t> pick_external(0, external.empty() ? 0 : external.size() - 1);
  std::vector<std::size_t> rows(data.size());
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.records()[i].is_trial())
      rows[i] = trial[pick_trial(rng)];
    else
      rows[i] = mode == Resampling::StratifiedByGroup ? external[pick_external(rng)] : i;
  }
  return rows;
}

double quantile_sorted(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) return std::numeric_limits<double>::quiet_NaN();
  const double h = (static_cast<double>(sorted.size()) - 1.0) * q;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

BootstrapResult bootstrap_ci(const Dataset& data, const Pipeline& pipeline, const BootstrapConfig& config) {
  if (config.replicates < 2) throw Error(ErrorCode::InvalidConfig, "bootstrap needs at least 2 replicates");
  if (!(config.level > 0.0 && config.level < 1.0))
    throw Error(ErrorCode::InvalidConfig, "confidence level must lie in (0, 1)");

  BootstrapResult res;
  res.level = config.level;
  res.replicates = config.replicates;
  res.point = pipeline(data);

  const auto B = static_cast<std::size_t>(config.replicates);
  res.estimates.assign(B, std::numeric_limits<double>::quiet_NaN());
  parallel_for(B, config.threads, [&](std::size_t r) {
    std::mt19937_64 rng(substream_seed(config.seed, r));
    try {
      const Dataset sample = data.select(resample_rows(data, config.resampling, rng));
      const double v = pipeline(sample);
      if (std::isfinite(v)) res.estimates[r] = v;
    } catch (const Error&) {
      // counted as a failure below
    }
  });

  std::vector<double> ok;
  ok.reserve(B);
  for (double v : res.estimates)
    if (!std::isnan(v)) ok.push_back(v);
  res.refits = static_cast<int>(ok.size());
  res.failures = config.replicates - res.refits;
  res.failure_fraction = static_cast<double>(res.failures) / static_cast<double>(config.replicates);
  if (ok.empty() || res.failure_fraction > config.max_failure_fraction)
    throw Error(ErrorCode::TooManyReplicateFailures,
                std::to_string(res.failures) + " of " + std::to_string(config.replicates) + " replicates failed");

  std::sort(ok.begin(), ok.end());
  const double tail = 0.5 * (1.0 - config.level);
  res.lower = quantile_sorted(ok, tail);
  res.upper = quantile_sorted(ok, 1.0 - tail);
  res.median = quantile_sorted(ok, 0.5);
  return res;
}

}  // namespace extctrl
