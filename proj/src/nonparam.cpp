#include "ltroc/nonparam.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#include "ltroc/error.hpp"

namespace ltroc {

namespace {

std::string fmt_time(double t) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", t);
  return buf;
}

std::vector<double> sorted_copy(std::span<const double> v) {
  std::vector<double> out(v.begin(), v.end());
  std::sort(out.begin(), out.end());
  return out;
}

std::size_t count_below(const std::vector<double>& sorted, double t) {
  return static_cast<std::size_t>(std::lower_bound(sorted.begin(), sorted.end(), t) - sorted.begin());
}

// Product-limit over (entry, time, failure flag); `exclude_tied_events` removes
// records with an event at u from the risk set at u (censoring target).
StepFunction product_limit(std::span<const double> entry, std::span<const double> time,
                           std::span<const unsigned char> event, Target target, GapPolicy policy, int* gaps) {
  const std::size_t n = time.size();
  std::vector<std::size_t> order;
  order.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const bool failure = target == Target::Event ? event[i] != 0 : event[i] == 0;
    if (failure) order.push_back(i);
  }
  if (order.empty()) {
    fail_estimation(target == Target::Event ? "no events to estimate S_T" : "no censored records to estimate S_C");
  }
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return time[a] < time[b]; });

  const auto entries = sorted_copy(entry);
  const auto times = sorted_copy(time);
  // event times, sorted, for the events-first exclusion
  std::vector<double> event_times;
  if (target == Target::Censoring) {
    for (std::size_t i = 0; i < n; ++i) {
      if (event[i]) event_times.push_back(time[i]);
    }
    std::sort(event_times.begin(), event_times.end());
  }

  std::vector<double> knots, values;
  double s = 1.0;
  for (std::size_t k = 0; k < order.size();) {
    const double u = time[order[k]];
    std::size_t d = 0;
    while (k < order.size() && time[order[k]] == u) {
      ++d;
      ++k;
    }
    double at_risk = static_cast<double>(count_below(entries, u)) - static_cast<double>(count_below(times, u));
    if (target == Target::Censoring) {
      auto range = std::equal_range(event_times.begin(), event_times.end(), u);
      at_risk -= static_cast<double>(range.second - range.first);
    }
    if (at_risk < static_cast<double>(d)) fail_estimation("nonidentifiable region at t=" + fmt_time(u));
    if (at_risk == static_cast<double>(d) && k < order.size()) {
      if (policy == GapPolicy::Strict) {
        fail_estimation("nonidentifiable region: risk set empties at t=" + fmt_time(u) + " before later failures");
      }
      if (gaps) ++*gaps;
    } else {
      s *= 1.0 - static_cast<double>(d) / at_risk;
    }
    knots.push_back(u);
    values.push_back(s);
  }
  return StepFunction(std::move(knots), std::move(values), 1.0);
}

}  // namespace

StepFunction km_truncated(const Cohort& cohort, Target target, GapPolicy policy, int* gaps) {
  if (gaps) *gaps = 0;
  return product_limit(cohort.entry(), cohort.time(), cohort.event(), target, policy, gaps);
}

StepFunction km_residual_censoring(const Cohort& cohort) {
  const std::size_t n = cohort.size();
  std::vector<double> zero(n, 0.0), residual(n);
  for (std::size_t i = 0; i < n; ++i) residual[i] = cohort.time()[i] - cohort.entry()[i];
  bool any_censored = false;
  for (auto e : cohort.event()) any_censored |= e == 0;
  if (!any_censored) return StepFunction::constant(1.0);
  return product_limit(zero, residual, cohort.event(), Target::Censoring, GapPolicy::Strict, nullptr);
}

AtRiskProportion::AtRiskProportion(const Cohort& cohort) : n_(static_cast<double>(cohort.size())) {
  // g(s) = (1/n) #{L_i <= s < T_i}: +1 at each L_i, -1 at each T_i
  std::vector<std::pair<double, int>> steps;
  steps.reserve(2 * cohort.size());
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    steps.emplace_back(cohort.entry()[i], +1);
    steps.emplace_back(cohort.time()[i], -1);
  }
  std::sort(steps.begin(), steps.end());
  std::vector<double> knots, values;
  long count = 0;
  for (std::size_t k = 0; k < steps.size();) {
    const double at = steps[k].first;
    while (k < steps.size() && steps[k].first == at) count += steps[k++].second;
    knots.push_back(at);
    values.push_back(static_cast<double>(count) / n_);
  }
  g_ = StepFunction(std::move(knots), std::move(values), 0.0);
}

AtRiskProportion at_risk_proportion(const Cohort& cohort) { return AtRiskProportion(cohort); }

std::vector<double> event_masses(const Cohort& cohort, const StepFunction& s_hat) {
  const AtRiskProportion r(cohort);
  const double n = static_cast<double>(cohort.size());
  std::vector<double> mass(cohort.size(), 0.0);
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    if (!cohort.event()[i]) continue;
    const double u = cohort.time()[i];
    const double at_risk = r(u);
    if (!(at_risk > 0.0)) fail_estimation("zero at-risk proportion at event time " + fmt_time(u));
    mass[i] = s_hat.left_limit(u) / (n * at_risk);
  }
  return mass;
}

double joint_ftx(const Cohort& cohort, const StepFunction& s_hat, double t, double c) {
  const auto mass = event_masses(cohort, s_hat);
  double sum = 0.0;
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    if (cohort.time()[i] <= t && cohort.score()[i] <= c) sum += mass[i];
  }
  return sum;
}

double marginal_fx(const Cohort& cohort, const StepFunction& s_hat, double c) {
  return joint_ftx(cohort, s_hat, std::numeric_limits<double>::infinity(), c);
}

StepFunction fl_marginal(const Cohort& cohort, const StepFunction& s_t, const StepFunction* s_c, Scenario scenario) {
  const bool type_b = !censoring_after_entry(scenario);
  if (type_b && s_c == nullptr) fail_estimation("B-scenario entry distribution requires S_C");
  const std::size_t n = cohort.size();
  std::vector<std::pair<double, double>> atoms(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double l = cohort.entry()[i];
    double surv = s_t(l);
    if (type_b) surv *= (*s_c)(l);
    if (!(surv > 0.0)) fail_estimation("entry beyond identifiable support at L=" + fmt_time(l));
    atoms[i] = {l, 1.0 / surv};
  }
  std::sort(atoms.begin(), atoms.end());
  double total = 0.0;
  for (const auto& a : atoms) total += a.second;
  std::vector<double> knots, values;
  double cum = 0.0;
  for (std::size_t k = 0; k < n;) {
    const double l = atoms[k].first;
    while (k < n && atoms[k].first == l) cum += atoms[k++].second;
    knots.push_back(l);
    values.push_back(cum / total);
  }
  values.back() = 1.0;
  return StepFunction(std::move(knots), std::move(values), 0.0);
}

}  // namespace ltroc
