#pragma once

#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ltroc/cohort.hpp"
#include "ltroc/nonparam.hpp"
#include "ltroc/step_function.hpp"

namespace ltroc {

/// How a fitted baseline turns into a survival curve.
///
/// Exponential: S(t|z) = exp(-Lambda0(t) e^{z'b}).
/// ProductLimit: S(t|z) = prod_{u <= t} (1 - dLambda0(u))^{e^{z'b}}, which
/// reduces to Kaplan-Meier when there are no covariates. Factors <= 0 before
/// the last knot are skipped, matching GapPolicy::Bridge.
enum class SurvivalForm { Exponential, ProductLimit };

struct FitConfig {
  int max_iter = 50;
  double tol = 1e-8;         // max-abs partial-likelihood gradient
  double beta_cap = 20.0;    // |beta_k| beyond this is reported as monotone likelihood
  std::optional<std::vector<double>> case_weights;
  SurvivalForm form = SurvivalForm::Exponential;
};

/// Fitted proportional-hazards model with a Breslow baseline.
class CoxModel {
 public:
  CoxModel() = default;
  CoxModel(std::vector<double> beta, StepFunction cumhaz, std::vector<std::string> names, SurvivalForm form);

  const std::vector<double>& coefficients() const { return beta_; }
  const StepFunction& baseline_cumhaz() const { return cumhaz_; }
  const std::vector<std::string>& covariate_names() const { return names_; }
  SurvivalForm form() const { return form_; }

  double linear_predictor(std::span<const double> z) const;
  /// S(t|z); equals 1 for t <= 0. Throws on dimension mismatch.
  double survival(double t, std::span<const double> z) const;
  /// S(t-|z).
  double survival_left(double t, std::span<const double> z) const;
  /// Same, with the linear predictor already computed.
  double survival_lp(double t, double lp) const;
  double survival_left_lp(double t, double lp) const;

  // Fit diagnostics.
  int iterations = 0;
  double gradient_norm = 0.0;
  std::vector<std::string> dropped;  // zero-variance covariates, coefficient fixed at 0

 private:
  double from_baseline(double cumhaz, double product_surv, double lp) const;

  std::vector<double> beta_;
  StepFunction cumhaz_ = StepFunction::constant(0.0);
  StepFunction product_ = StepFunction::constant(1.0);  // prod (1 - dLambda0)
  std::vector<std::string> names_;
  SurvivalForm form_ = SurvivalForm::Exponential;
};

/// Counting-process data for one fit: record i is at risk on (entry_i, exit_i].
struct SurvivalData {
  std::vector<double> entry, exit;
  std::vector<unsigned char> failure;
  std::vector<double> z;  // row-major n x p
  std::vector<double> weight;
  std::size_t p = 0;
  /// Records that exit at a failure time without failing leave the risk set
  /// before that failure (used when censorings are the failures).
  bool exclude_tied_nonfailures = false;
};

/// Breslow-tie weighted log partial likelihood and its derivatives.
class PartialLikelihood {
 public:
  explicit PartialLikelihood(const SurvivalData& data);
  double value(std::span<const double> beta) const;
  std::vector<double> gradient(std::span<const double> beta) const;
  /// Returns value; fills gradient and negative Hessian (row-major p x p).
  double evaluate(std::span<const double> beta, std::vector<double>* grad, std::vector<double>* neg_hess) const;
  /// Breslow increments at the distinct failure times.
  StepFunction breslow(std::span<const double> beta) const;
  std::size_t num_failures() const { return fail_times_.size(); }

 private:
  const SurvivalData& d_;
  std::vector<std::size_t> by_exit_, by_entry_;  // descending
  std::vector<double> fail_times_;               // distinct, descending
  std::vector<double> mean_;
};

/// Newton-Raphson fit with step-halving.
CoxModel fit_cox(const SurvivalData& data, const std::vector<std::string>& names, const FitConfig& config);

/// Left-truncation-adjusted Cox fit with risk sets {L_i < t <= Ttilde_i}.
CoxModel fit_cox_ltrc(const Cohort& cohort, Target target, const FitConfig& config);

/// Cox model for the residual censoring time D = Ttilde - L, observed from 0.
/// With no censored records the model is degenerate (S_D|Z == 1).
CoxModel fit_residual_censoring(const Cohort& cohort, const FitConfig& config);

/// Conditional entry-time distribution F_{L|Z}(s|z), estimated as the survival
/// of the reverse entry time tau - L truncated by tau - Ttilde.
class EntryDistribution {
 public:
  EntryDistribution(CoxModel reverse_model, double tau);

  /// F(s|z) = S_rev((tau - s)- | z) for s >= 0, 0 below.
  double cdf(double s, std::span<const double> z) const;
  /// F(s-|z).
  double cdf_left(double s, std::span<const double> z) const;
  /// Atoms (location, mass) of F(.|z) in increasing location order. Mass left
  /// over by the reverse fit sits at s = 0.
  std::vector<std::pair<double, double>> atoms(std::span<const double> z) const;
  const CoxModel& reverse_model() const { return model_; }
  double tau() const { return tau_; }

 private:
  CoxModel model_;
  double tau_;
};

/// Under A-scenarios uses uncensored records weighted by 1/S_D|Z(Ttilde - L | Z);
/// under B-scenarios all records unweighted. `tau` defaults to max Ttilde.
EntryDistribution fit_entry_distribution(const Cohort& cohort, Scenario scenario, const CoxModel* s_d_given_z,
                                         const FitConfig& config, std::optional<double> tau = std::nullopt);

}  // namespace ltroc
