#include <doctest.h>

#include <cmath>
#include <thread>

#include "ltroc/condsurv.hpp"
#include "ltroc/error.hpp"
#include "ltroc/nonparam.hpp"
#include "ltroc/simlab.hpp"
#include "ltroc/weights.hpp"

using namespace ltroc;

namespace {

StepFunction uniform_atoms() { return StepFunction({1, 2, 3}, {1.0 / 3, 2.0 / 3, 1.0}, 0.0); }

Cohort sim(std::uint64_t seed) {
  SimScenario s;
  return apply_ltrc(generate_population(s, seed));
}

}  // namespace

TEST_CASE("B-type marginal weights are products") {
  const StepFunction fl = uniform_atoms();
  const StepFunction sc({2.5}, {0.8}, 1.0);
  const MarginalK1 k1 = build_k1(Scenario::B1, fl, nullptr, &sc);
  CHECK(k1(2.5) == doctest::Approx(0.8 * 2.0 / 3.0));
  CHECK(k1(3.0) == doctest::Approx(0.8 * 2.0 / 3.0));  // atom at 3 is not below 3

  const StepFunction sc2({3.0}, {0.5}, 1.0);
  const StepFunction fl2({1, 2, 4}, {0.25, 0.75, 1.0}, 0.0);
  const MarginalK2 k2 = build_k2(Scenario::B1, fl2, nullptr, &sc2);
  CHECK(k2(3, 4) == doctest::Approx(0.375));
  CHECK_THROWS_AS(build_k1(Scenario::B1, fl, nullptr, nullptr), Error);
}

TEST_CASE("A-type marginal weights integrate S_D over entry atoms") {
  const StepFunction sd({1.0, 2.0}, {0.5, 0.25}, 1.0);
  const StepFunction point({0.0}, {1.0}, 0.0);
  const MarginalK1 k1 = build_k1(Scenario::A1, point, &sd, nullptr);
  for (double u : {0.5, 1.0, 1.5, 2.5}) CHECK(k1(u) == sd(u));

  const StepFunction one = StepFunction::constant(1.0);
  const StepFunction fl = uniform_atoms();
  const MarginalK1 k1n = build_k1(Scenario::A1, fl, &one, nullptr);
  for (double u : {0.5, 1.0, 1.5, 2.0, 3.5}) CHECK(k1n(u) == doctest::Approx(fl.left_limit(u)));

  // t at or below the first atom: every S_D argument is <= 0
  const MarginalK2 k2 = build_k2(Scenario::A1, fl, &sd, nullptr);
  CHECK(k2(1.0, 3.5) == doctest::Approx(fl.left_limit(3.5)));
  // by hand: atoms 1, 2 below 2.5, S_D(1.5) = 0.5, S_D(0.5) = 1
  const MarginalK1 k1s = build_k1(Scenario::A1, fl, &sd, nullptr);
  CHECK(k1s(2.5) == doctest::Approx((0.5 + 1.0) / 3.0));
}

TEST_CASE("K2(u,u) equals K1(u)") {
  const Cohort c = sim(1);
  const StepFunction st = km_truncated(c, Target::Event);
  const StepFunction sd = km_residual_censoring(c);
  const StepFunction sc = km_truncated(c, Target::Censoring);
  for (Scenario s : {Scenario::A1, Scenario::B1}) {
    const bool a = s == Scenario::A1;
    const StepFunction fl = fl_marginal(c, st, a ? nullptr : &sc, s);
    const auto k1 = build_k1(s, fl, a ? &sd : nullptr, a ? nullptr : &sc);
    const auto k2 = build_k2(s, fl, a ? &sd : nullptr, a ? nullptr : &sc);
    for (double u : c.time()) CHECK(k2(u, u) == k1(u));
  }
}

TEST_CASE("no truncation and no censoring gives unit K1") {
  const StepFunction point({0.0}, {1.0}, 0.0);
  const StepFunction one = StepFunction::constant(1.0);
  for (Scenario s : {Scenario::A1, Scenario::B1}) {
    const auto k1 = build_k1(s, point, &one, &one);
    for (double u : {0.01, 1.0, 7.0}) CHECK(k1(u) == 1.0);
  }
}

TEST_CASE("conditional weights") {
  const Cohort c = sim(2);
  const CoxModel sd = fit_residual_censoring(c, {});
  const EntryDistribution fl = fit_entry_distribution(c, Scenario::A2, &sd, {});
  const ConditionalPair kc = build_kc(Scenario::A2, fl, &sd, nullptr);
  const std::vector<double> z = {0.2, 1.0};
  for (double u : {0.5, 1.0, 2.0, 3.0}) CHECK(kc.kc2(u, u, z) == kc.kc1(u, z));

  // S_D|Z == 1 leaves F(u-|z)
  const CoxModel unit(std::vector<double>{0.0, 0.0}, StepFunction::constant(0.0), {"z1", "z2"},
                      SurvivalForm::Exponential);
  const ConditionalPair plain = build_kc(Scenario::A2, fl, &unit, nullptr);
  for (double u : {0.5, 1.0, 2.0, 3.0}) CHECK(plain.kc1(u, z) == doctest::Approx(fl.cdf_left(u, z)).epsilon(1e-12));

  CHECK_THROWS_AS(build_kc(Scenario::A2, fl, nullptr, nullptr), Error);
  CHECK_THROWS_AS(build_kc(Scenario::B2, fl, nullptr, nullptr), Error);
}

TEST_CASE("covariate-free conditional K1 equals the marginal K1") {
  std::vector<CohortRecord> rows;
  for (int i = 0; i < 10; ++i) rows.push_back({0.1 * (i % 4), 1.0 + 0.3 * i, i % 3 != 0, {}, 0.0});
  const Cohort c(rows, {});
  FitConfig pl;
  pl.form = SurvivalForm::ProductLimit;
  const CoxModel sc = fit_cox_ltrc(c, Target::Censoring, pl);
  const EntryDistribution fz = fit_entry_distribution(c, Scenario::B2, nullptr, pl);
  const ConditionalPair kc = build_kc(Scenario::B2, fz, nullptr, &sc);
  const StepFunction st = km_truncated(c, Target::Event);
  const StepFunction sc_km = km_truncated(c, Target::Censoring);
  const auto k1 = build_k1(Scenario::B1, fl_marginal(c, st, &sc_km, Scenario::B1), nullptr, &sc_km);
  const StepFunction sc_step = km_truncated(c, Target::Censoring);
  for (double u : {1.05, 1.5, 2.2, 3.0}) {
    CHECK(sc.survival(u, {}) == doctest::Approx(sc_step(u)).epsilon(1e-12));
    CHECK(kc.kc1(u, {}) == doctest::Approx(sc_step(u) * fz.cdf_left(u, {})).epsilon(1e-12));
    CHECK(kc.kc1(u, {}) == doctest::Approx(k1(u)).epsilon(1e-12));
  }
}

TEST_CASE("H under A and B") {
  const CoxModel st(std::vector<double>{0.0}, StepFunction({2.0}, {-std::log(0.8)}, 0.0), {"z"},
                    SurvivalForm::Exponential);
  const CoxModel sc(std::vector<double>{0.0}, StepFunction({2.0}, {-std::log(0.5)}, 0.0), {"z"},
                    SurvivalForm::Exponential);
  const std::vector<double> z0 = {0.3};
  CHECK(build_h(Scenario::A2, st, nullptr)(0.0, z0) == 1.0);
  CHECK(build_h(Scenario::B2, st, &sc)(2.0, z0) == doctest::Approx(0.4).epsilon(1e-14));
  const CoxModel none(std::vector<double>{0.0}, StepFunction::constant(0.0), {"z"}, SurvivalForm::Exponential);
  for (double u : {0.5, 2.0, 3.0}) CHECK(build_h(Scenario::B2, st, &none)(u, z0) == build_h(Scenario::A2, st, nullptr)(u, z0));
  CHECK_THROWS_AS(build_h(Scenario::B2, st, nullptr), Error);
}

TEST_CASE("floor clamps and counts") {
  WeightKit kit(Scenario::A1, 1e-3);
  const StepFunction sd = StepFunction::constant(1.0);
  const StepFunction fl({1.0}, {1.0}, 0.0);
  kit.set_marginal(build_k1(Scenario::A1, fl, &sd, nullptr), build_k2(Scenario::A1, fl, &sd, nullptr));
  CHECK(kit.k1(0.5) == 1e-3);  // no entry mass below 0.5
  CHECK(kit.k1(2.0) == 1.0);
  CHECK(kit.clamp(1.5) == 1.0);
  const WeightKit copy = kit;
  copy.clamp(-2.0);
  const WeightStats st = kit.stats();
  CHECK(st.clamped == 2);
  CHECK(st.min_raw == -2.0);
  kit.reset_stats();
  CHECK(kit.stats().clamped == 0);
  CHECK_THROWS_AS(WeightKit(Scenario::A1, 0.0), Error);
  CHECK_THROWS_AS(WeightKit(Scenario::A1).kc1(1.0, {}), Error);
}

TEST_CASE("clamp counter is safe under concurrent use") {
  const WeightKit kit(Scenario::A1, 0.5);
  std::vector<std::thread> pool;
  for (int w = 0; w < 4; ++w)
    pool.emplace_back([&, w] {
      for (int i = 0; i < 1000; ++i) kit.clamp(0.1 - 1e-4 * (w * 1000 + i));
    });
  for (auto& t : pool) t.join();
  CHECK(kit.stats().clamped == 4000);
  CHECK(kit.stats().min_raw == doctest::Approx(0.1 - 1e-4 * 3999));
}

TEST_CASE("effective sample size") {
  CHECK(effective_sample_size(std::vector<double>{}) == 0.0);
  CHECK(effective_sample_size(std::vector<double>{2, 2, 2}) == 3.0);
  CHECK(effective_sample_size(std::vector<double>{1, 3}) == doctest::Approx(4.0 / 3.0));
}
