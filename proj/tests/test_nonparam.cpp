#include <doctest.h>

#include <limits>
#include <random>

#include "d1.hpp"
#include "ltroc/error.hpp"
#include "ltroc/nonparam.hpp"
#include "oracle.hpp"

using namespace ltroc;
using doctest::Approx;

TEST_CASE("truncated KM on the hand example") {
  const StepFunction s = km_truncated(d1_cohort(), Target::Event);
  CHECK(s(1.999) == 1.0);
  CHECK(s(2) == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  CHECK(s(3) == doctest::Approx(4.0 / 9.0).epsilon(1e-15));
  CHECK(s(5) == 0.0);
  CHECK(s.left_limit(5) == doctest::Approx(4.0 / 9.0).epsilon(1e-15));

  const StepFunction c = km_truncated(d1_cohort(), Target::Censoring);
  REQUIRE(c.knots().size() == 1);
  CHECK(c.knots()[0] == 4.0);
  CHECK(c(4) == 0.5);
}

TEST_CASE("KM without truncation or censoring is the empirical survival") {
  const Cohort two({{0, 1, true, {}, 0}, {0, 2, true, {}, 0}}, {});
  const StepFunction s = km_truncated(two, Target::Event);
  CHECK(s(1) == 0.5);
  CHECK(s(2) == 0.0);

  std::mt19937_64 rng(4);
  const auto r = oracle::random_complete(rng, 40, 0);
  const Cohort c = oracle::make_cohort(r);
  const StepFunction km = km_truncated(c, Target::Event);
  for (const auto& x : r) {
    double above = 0;
    for (const auto& y : r) above += y.t > x.t;
    CHECK(km(x.t) == doctest::Approx(above / 40.0).epsilon(1e-14));
  }
}

TEST_CASE("events are processed before tied censorings") {
  // event and censoring both at 2: the censored record stays in the event risk
  // set and is not at risk for the censoring hazard alongside the event
  const Cohort c({{0, 2, true, {}, 0}, {0, 2, false, {}, 0}, {0, 3, true, {}, 0}, {0, 4, false, {}, 0}}, {});
  const StepFunction s = km_truncated(c, Target::Event);
  CHECK(s(2) == doctest::Approx(0.75));
  const StepFunction sc = km_truncated(c, Target::Censoring);
  CHECK(sc(2) == doctest::Approx(1.0 - 1.0 / 3.0));
}

TEST_CASE("risk-set gaps: Bridge skips, Strict throws") {
  // the only record at risk at 1 fails, then a later entrant fails at 3
  const Cohort c({{0, 1, true, {}, 0}, {2, 3, true, {}, 0}, {2, 4, false, {}, 0}}, {});
  int gaps = -1;
  const StepFunction s = km_truncated(c, Target::Event, GapPolicy::Bridge, &gaps);
  CHECK(gaps == 1);
  CHECK(s(1) == 1.0);
  CHECK(s(3) == 0.5);
  CHECK_THROWS_AS(km_truncated(c, Target::Event, GapPolicy::Strict), Error);
  // a zero factor at the last failure is an honest zero, not a gap
  const StepFunction tail = km_truncated(d1_cohort(), Target::Event, GapPolicy::Strict);
  CHECK(tail(5) == 0.0);
}

TEST_CASE("KM matches the oracle product-limit on random LTRC cohorts") {
  std::mt19937_64 rng(12);
  for (int rep = 0; rep < 30; ++rep) {
    const auto r = oracle::random_small(rng, 25, rep % 2 == 1);
    const Cohort c = oracle::make_cohort(r, {"z1", "z2"});
    bool censored = false;
    for (const auto& x : r) censored |= !x.d;
    for (bool cens : {false, true}) {
      if (cens && !censored) continue;
      const StepFunction got = km_truncated(c, cens ? Target::Censoring : Target::Event);
      const oracle::Pl want = oracle::km(r, cens);
      for (const auto& x : r) {
        CHECK(got(x.t) == doctest::Approx(want.at(x.t)).epsilon(1e-13));
        CHECK(got.left_limit(x.t) == doctest::Approx(want.left(x.t)).epsilon(1e-13));
      }
    }
  }
}

TEST_CASE("at-risk proportion is left-continuous") {
  const AtRiskProportion r(d1_cohort());
  CHECK(r(3) == 0.75);
  CHECK(r(0.5) == 0.5);
  CHECK(r(2) == 0.75);  // records 1 to 3; record 4 enters at 2, not before
  CHECK(r(6) == 0.0);
  CHECK(r.count(3) == doctest::Approx(3.0));
}

TEST_CASE("joint and marginal F_TX on the hand example") {
  const Cohort d1 = d1_cohort();
  const StepFunction s = km_truncated(d1, Target::Event);
  CHECK(joint_ftx(d1, s, 3, 0.95) == doctest::Approx(5.0 / 9.0).epsilon(1e-14));
  CHECK(joint_ftx(d1, s, 3, 0.0) == 0.0);
  const double inf = std::numeric_limits<double>::infinity();
  CHECK(marginal_fx(d1, s, inf) == doctest::Approx(1.0).epsilon(1e-14));
}

TEST_CASE("F_TX is monotone and consistent with S_T") {
  std::mt19937_64 rng(31);
  const auto r = oracle::random_small(rng, 60, false);
  const Cohort c = oracle::make_cohort(r, {"z1", "z2"});
  const StepFunction s = km_truncated(c, Target::Event);
  const double inf = std::numeric_limits<double>::infinity();
  double prev_t = 0;
  for (double t = 0.2; t < 3.0; t += 0.2) {
    const double v = joint_ftx(c, s, t, inf);
    CHECK(v >= prev_t - 1e-15);
    prev_t = v;
    double prev_c = 0;
    for (double x = 0.1; x <= 1.0; x += 0.1) {
      const double w = joint_ftx(c, s, t, x);
      CHECK(w >= prev_c - 1e-15);
      prev_c = w;
    }
    if (s.tail_value() == 0.0) CHECK(v + s(t) <= 1.0 + 1e-10);
  }
}

TEST_CASE("marginal entry distribution") {
  const Cohort d1 = d1_cohort();
  const StepFunction s = km_truncated(d1, Target::Event);
  const StepFunction fl = fl_marginal(d1, s, nullptr, Scenario::A1);
  CHECK(fl(1) == doctest::Approx(2.0 / 3.0).epsilon(1e-14));
  CHECK(fl(-0.1) == 0.0);
  CHECK(fl(2) == 1.0);

  const Cohort zero({{0, 1, true, {}, 0}, {0, 2, true, {}, 0}}, {});
  const StepFunction fz = fl_marginal(zero, km_truncated(zero, Target::Event), nullptr, Scenario::A1);
  CHECK(fz(0) == 1.0);

  const StepFunction one = StepFunction::constant(1.0);
  const StepFunction fb = fl_marginal(d1, s, &one, Scenario::B1);
  for (double u : {0.0, 0.5, 1.0, 1.5, 2.0}) CHECK(fb(u) == fl(u));
  CHECK_THROWS_AS(fl_marginal(d1, s, nullptr, Scenario::B1), Error);
}

TEST_CASE("entry beyond the identifiable support is an error") {
  // S_T reaches 0 at 2, and the second record enters at 3
  const Cohort c({{0, 2, true, {}, 0}, {3, 4, false, {}, 0}}, {});
  const StepFunction s = km_truncated(c, Target::Event);
  CHECK_THROWS_WITH_AS(fl_marginal(c, s, nullptr, Scenario::A1), doctest::Contains("identifiable support"), Error);
}

TEST_CASE("residual censoring KM") {
  const Cohort d1 = d1_cohort();
  const StepFunction sd = km_residual_censoring(d1);
  // residuals: 2, 2, 4 (censored), 3; at 4 only the censored record is left
  CHECK(sd(3.99) == 1.0);
  CHECK(sd(4) == 0.0);
  const Cohort none({{0, 1, true, {}, 0}, {0.5, 2, true, {}, 0}}, {});
  CHECK(km_residual_censoring(none)(10) == 1.0);
}
