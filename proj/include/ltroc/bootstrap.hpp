#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "ltroc/cohort.hpp"

namespace ltroc {

struct BootstrapConfig {
  int n_resamples = 500;
  std::uint64_t seed = 1;
  double ci_level = 0.95;
  int threads = 1;  // 0 = all hardware threads
};

struct BootstrapInterval {
  double point = 0.0, lo = 0.0, hi = 0.0;
  int n_failed = 0;
};

std::uint64_t splitmix64(std::uint64_t x);
/// Seed of the RNG substream for one replicate.
std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index);
/// Row indices of replicate `index`: n draws with replacement.
std::vector<std::size_t> resample_indices(std::size_t n, std::uint64_t seed, std::uint64_t index);

/// Nearest-order-statistic quantile of sorted values: v[ceil(q m) - 1].
double order_statistic_quantile(const std::vector<double>& sorted, double q);

int resolve_threads(int requested);
/// Runs body(0..n-1) over `threads` workers. Exceptions escaping body are
/// rethrown after all workers finish (the lowest index wins).
void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body);

/// Percentile interval. Replicates where the statistic throws Error are
/// counted in n_failed; more than 20% failures throws "bootstrap unstable".
BootstrapInterval bootstrap_ci(const Cohort& cohort, const std::function<double(const Cohort&)>& statistic,
                               const BootstrapConfig& config);

/// Several statistics sharing each resample. A NaN component marks that
/// component failed for the replicate; a thrown Error fails all of them.
std::vector<BootstrapInterval> bootstrap_ci_many(const Cohort& cohort,
                                                 const std::function<std::vector<double>(const Cohort&)>& statistic,
                                                 const BootstrapConfig& config);

}  // namespace ltroc
