#pragma once

#include <optional>
#include <vector>

#include "ltroc/cohort.hpp"
#include "ltroc/step_function.hpp"

namespace ltroc {

/// Which observed times count as failures for a product-limit estimator.
enum class Target { Event, Censoring };

/// Product-limit estimator with left-truncation-adjusted risk sets
/// {i : L_i < u <= Ttilde_i}.
///
/// What to do when every record at risk fails at u while later target
/// failures remain (the risk set empties and refills from later entrants).
/// Bridge skips the factor at u, so the curve stays positive across the gap;
/// Strict throws Error(Estimation) "nonidentifiable region".
enum class GapPolicy { Bridge, Strict };

/// At a time shared by an event and a censoring, the event is processed first:
/// censored records stay in the event risk set at their own time, and records
/// failing at u are not in the censoring risk set at u. `gaps`, when given,
/// receives the number of bridged factors.
StepFunction km_truncated(const Cohort& cohort, Target target, GapPolicy policy = GapPolicy::Bridge,
                          int* gaps = nullptr);

/// Kaplan-Meier of the residual censoring time D = Ttilde - L (censored
/// records are the failures), observed from zero for every record.
StepFunction km_residual_censoring(const Cohort& cohort);

/// Rhat(t) = (1/n) #{i : L_i < t <= Ttilde_i}.
///
/// This function is left-continuous in t, so it is carried as the
/// right-continuous g(s) = (1/n) #{L_i <= s < Ttilde_i} with Rhat(t) = g(t-).
class AtRiskProportion {
 public:
  explicit AtRiskProportion(const Cohort& cohort);
  double operator()(double t) const { return g_.left_limit(t); }
  /// Number at risk, n * Rhat(t).
  double count(double t) const { return (*this)(t) * n_; }
  const StepFunction& right_continuous() const { return g_; }

 private:
  StepFunction g_;
  double n_ = 0;
};

AtRiskProportion at_risk_proportion(const Cohort& cohort);

/// Per-record mass Delta_i Shat(Ttilde_i-) / (n Rhat(Ttilde_i)); zero for
/// censored records. F_TX(t, c) sums these over {Ttilde_i <= t, X_i <= c}.
std::vector<double> event_masses(const Cohort& cohort, const StepFunction& s_hat);

/// Estimate of P(T <= t, X <= c).
double joint_ftx(const Cohort& cohort, const StepFunction& s_hat, double t, double c);
/// Estimate of P(X <= c), the t = infinity case of joint_ftx.
double marginal_fx(const Cohort& cohort, const StepFunction& s_hat, double c);

/// Inverse-survival-weighted empirical distribution of the entry times.
/// Weights 1/S_T(L_i) under A-scenarios, 1/{S_T(L_i) S_C(L_i)} under
/// B-scenarios (s_c required).
StepFunction fl_marginal(const Cohort& cohort, const StepFunction& s_t, const StepFunction* s_c, Scenario scenario);

}  // namespace ltroc
