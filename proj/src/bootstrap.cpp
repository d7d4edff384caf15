#include "ltroc/bootstrap.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <random>
#include <thread>

#include "ltroc/error.hpp"

namespace ltroc {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::uint64_t substream_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) ^ (index * 0xD1B54A32D192ED03ULL + 1));
}

std::vector<std::size_t> resample_indices(std::size_t n, std::uint64_t seed, std::uint64_t index) {
  std::mt19937_64 rng(substream_seed(seed, index));
  std::vector<std::size_t> rows(n);
  for (auto& r : rows) {
    r = static_cast<std::size_t>((static_cast<unsigned __int128>(rng()) * n) >> 64);
  }
  return rows;
}

double order_statistic_quantile(const std::vector<double>& sorted, double q) {
  if (sorted.empty()) fail_estimation("quantile of empty sample");
  const double m = static_cast<double>(sorted.size());
  // small slack so that q*m landing on an integer is not pushed up by rounding
  const double rank = std::ceil(q * m - 1e-9);
  const auto k = static_cast<std::size_t>(std::clamp(rank - 1.0, 0.0, m - 1.0));
  return sorted[k];
}

int resolve_threads(int requested) {
  if (requested > 0) return requested;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

void parallel_for(std::size_t n, int threads, const std::function<void(std::size_t)>& body) {
  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(resolve_threads(threads)), n);
  if (workers <= 1) {
    for (std::size_t i = 0; i < n; ++i) body(i);
    return;
  }
  std::vector<std::exception_ptr> errors(n);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (std::size_t i = w; i < n; i += workers) {
        try {
          body(i);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::vector<BootstrapInterval> bootstrap_ci_many(const Cohort& cohort,
                                                 const std::function<std::vector<double>(const Cohort&)>& statistic,
                                                 const BootstrapConfig& config) {
  if (config.n_resamples < 1) throw Error(ErrorKind::Usage, "n_resamples must be >= 1");
  if (!(config.ci_level > 0.0 && config.ci_level < 1.0)) throw Error(ErrorKind::Usage, "ci_level must lie in (0,1)");
  const std::vector<double> point = statistic(cohort);
  const std::size_t dims = point.size();
  const auto reps = static_cast<std::size_t>(config.n_resamples);
  std::vector<std::vector<double>> values(reps);
  parallel_for(reps, config.threads, [&](std::size_t b) {
    const Cohort sample = cohort.subset(resample_indices(cohort.size(), config.seed, b));
    try {
      values[b] = statistic(sample);
      if (values[b].size() != dims) throw Error(ErrorKind::Usage, "statistic changed dimension");
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::Usage) throw;
      values[b].assign(dims, std::nan(""));
    }
  });

  const double alpha = 1.0 - config.ci_level;
  std::vector<BootstrapInterval> out(dims);
  for (std::size_t d = 0; d < dims; ++d) {
    std::vector<double> ok;
    ok.reserve(reps);
    for (const auto& v : values) {
      if (std::isfinite(v[d])) ok.push_back(v[d]);
    }
    out[d].point = point[d];
    out[d].n_failed = static_cast<int>(reps - ok.size());
    if (static_cast<double>(out[d].n_failed) > 0.2 * static_cast<double>(reps) || ok.empty()) {
      fail_estimation("bootstrap unstable: " + std::to_string(out[d].n_failed) + " of " + std::to_string(reps) +
                      " replicates failed");
    }
    std::sort(ok.begin(), ok.end());
    out[d].lo = order_statistic_quantile(ok, alpha / 2.0);
    out[d].hi = order_statistic_quantile(ok, 1.0 - alpha / 2.0);
  }
  return out;
}

BootstrapInterval bootstrap_ci(const Cohort& cohort, const std::function<double(const Cohort&)>& statistic,
                               const BootstrapConfig& config) {
  return bootstrap_ci_many(
             cohort, [&](const Cohort& c) { return std::vector<double>{statistic(c)}; }, config)
      .front();
}

}  // namespace ltroc
