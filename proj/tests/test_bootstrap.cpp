#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "ltroc/bootstrap.hpp"
#include "ltroc/error.hpp"
#include "properties.hpp"

using namespace ltroc;

namespace {

Cohort hundred() {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<CohortRecord> rows;
  for (int i = 0; i < 100; ++i) rows.push_back({0.0, 0.1 + u(rng), true, {}, u(rng)});
  return Cohort(rows, {});
}

double mean_score(const Cohort& c) {
  double s = 0;
  for (double x : c.score()) s += x;
  return s / static_cast<double>(c.size());
}

// Independent resampler over the documented stream: splitmix64 substream
// seed feeding mt19937_64, index = floor(draw * n / 2^64).
std::uint64_t mix(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

TEST_CASE("constant statistic gives a degenerate interval") {
  BootstrapConfig cfg;
  cfg.n_resamples = 50;
  const auto ci = bootstrap_ci(hundred(), [](const Cohort&) { return 0.42; }, cfg);
  CHECK(ci.point == 0.42);
  CHECK(ci.lo == 0.42);
  CHECK(ci.hi == 0.42);
  CHECK(ci.n_failed == 0);
}

TEST_CASE("percentile interval of the mean matches an oracle resampler") {
  const Cohort c = hundred();
  BootstrapConfig cfg;
  cfg.n_resamples = 200;
  cfg.seed = 1234;
  const auto ci = bootstrap_ci(c, mean_score, cfg);

  std::vector<double> means;
  for (std::uint64_t b = 0; b < 200; ++b) {
    std::mt19937_64 rng(mix(mix(1234) ^ (b * 0xD1B54A32D192ED03ULL + 1)));
    double s = 0;
    for (int i = 0; i < 100; ++i) {
      const auto k = static_cast<std::size_t>((static_cast<unsigned __int128>(rng()) * 100u) >> 64);
      s += c.score()[k];
    }
    means.push_back(s / 100.0);
  }
  std::sort(means.begin(), means.end());
  // nearest order statistic: ceil(0.025 * 200) = 5th, ceil(0.975 * 200) = 195th
  CHECK(ci.lo == means[4]);
  CHECK(ci.hi == means[194]);
  CHECK(ci.point == mean_score(c));
}

TEST_CASE("fixed seed reproduces bit-identical intervals") {
  BootstrapConfig cfg;
  cfg.n_resamples = 100;
  cfg.seed = 9;
  const auto a = bootstrap_ci(hundred(), mean_score, cfg);
  const auto b = bootstrap_ci(hundred(), mean_score, cfg);
  CHECK(a.lo == b.lo);
  CHECK(a.hi == b.hi);
  cfg.seed = 10;
  const auto d = bootstrap_ci(hundred(), mean_score, cfg);
  CHECK((d.lo != a.lo || d.hi != a.hi));
}

TEST_CASE("property: bootstrap bit-determinism across thread counts") {
  const auto c = props::bootstrap_thread_determinism();
  INFO(c.detail);
  CHECK(c.ok);
}

TEST_CASE("failed replicates are counted, too many is unstable") {
  BootstrapConfig cfg;
  cfg.n_resamples = 100;
  int calls = 0;
  // fails on every 10th replicate evaluation after the point estimate
  auto sometimes = [&](const Cohort& c) {
    if (calls++ > 0 && calls % 10 == 0) throw Error(ErrorKind::Estimation, "degenerate");
    return mean_score(c);
  };
  const auto ci = bootstrap_ci(hundred(), sometimes, cfg);
  CHECK(ci.n_failed == 10);
  CHECK(ci.lo <= ci.hi);

  calls = 0;
  auto often = [&](const Cohort& c) {
    if (calls++ > 0 && calls % 4 == 0) throw Error(ErrorKind::Estimation, "degenerate");
    return mean_score(c);
  };
  CHECK_THROWS_WITH_AS(bootstrap_ci(hundred(), often, cfg), doctest::Contains("bootstrap unstable"), Error);
  CHECK_THROWS_AS(bootstrap_ci(hundred(), [](const Cohort&) -> double { throw Error(ErrorKind::Usage, "bad"); }, cfg),
                  Error);
}

TEST_CASE("quantile convention and config validation") {
  const std::vector<double> v = {1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
  CHECK(order_statistic_quantile(v, 0.025) == 1);
  CHECK(order_statistic_quantile(v, 0.5) == 5);
  CHECK(order_statistic_quantile(v, 0.3) == 3);
  CHECK(order_statistic_quantile(v, 0.975) == 10);
  CHECK_THROWS_AS(order_statistic_quantile({}, 0.5), Error);
  BootstrapConfig bad;
  bad.n_resamples = 0;
  CHECK_THROWS_AS(bootstrap_ci(hundred(), mean_score, bad), Error);
  bad.n_resamples = 10;
  bad.ci_level = 1.0;
  CHECK_THROWS_AS(bootstrap_ci(hundred(), mean_score, bad), Error);
}

TEST_CASE("parallel_for covers every index once and rethrows") {
  std::vector<int> hits(37, 0);
  parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
  CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
  CHECK_THROWS_AS(parallel_for(10, 3,
                               [](std::size_t i) {
                                 if (i == 7) throw Error(ErrorKind::Estimation, "x");
                               }),
                  Error);
  CHECK(resolve_threads(3) == 3);
  CHECK(resolve_threads(0) >= 1);
}
