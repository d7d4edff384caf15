#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ltroc/cohort.hpp"
#include "ltroc/condsurv.hpp"
#include "ltroc/nonparam.hpp"
#include "ltroc/step_function.hpp"
#include "ltroc/weights.hpp"

namespace ltroc {

enum class EstimatorId { RegNp, RegSp, Ipw1, Ipw2, Cipw1, Cipw2, LiNp, LiSp, RcIpw, RcCipw };

/// Accepts "reg-np", "REG_NP", "ipw1", "ipw-1", ... Throws Error(Usage).
EstimatorId parse_estimator(std::string_view name);
std::vector<EstimatorId> parse_estimator_list(std::string_view list);
std::string to_string(EstimatorId id);
const std::vector<EstimatorId>& all_estimators();
bool needs_conditional_weights(EstimatorId id);

struct RocResult {
  EstimatorId estimator = EstimatorId::RegNp;
  double t = 0.0;
  std::vector<double> thresholds;  // ascending, first -inf, last +inf
  std::vector<double> se, sp;
  double auc = 0.0;      // clamped to [0,1]
  double auc_raw = 0.0;  // before clamping
  std::optional<std::pair<double, double>> auc_ci;
  double ess = 0.0;  // effective sample size of the case weights
};

// Regression-type, nonparametric.
double se_reg_np(const Cohort& cohort, const StepFunction& s_t, double c, double t);
double sp_reg_np(const Cohort& cohort, const StepFunction& s_t, double c, double t);
double auc_reg_np(const Cohort& cohort, const StepFunction& s_t, double t);

struct SeSpAuc {
  double se = 0.0, sp = 0.0, auc = 0.0;
};

/// Regression-type, semiparametric. `h` is evaluated through the kit's floor.
SeSpAuc se_sp_auc_reg_sp(const Cohort& cohort, const CoxModel& s_t_given_z, const WeightKit& kit, double c, double t);

// Marginal inverse probability weighting; the kit must hold K1/K2.
double se_ipw(const Cohort& cohort, const WeightKit& kit, double c, double t);
double sp_ipw1(const Cohort& cohort, const WeightKit& kit, double c, double t);
double auc_ipw1(const Cohort& cohort, const WeightKit& kit, double t);
double sp_ipw2(const Cohort& cohort, double c, double t);
double auc_ipw2(const Cohort& cohort, const WeightKit& kit, double t);

struct CipwFamily {
  double se_cipw = 0.0, sp_cipw1 = 0.0, auc_cipw1 = 0.0, sp_cipw2 = 0.0, auc_cipw2 = 0.0;
};
/// Conditional weighting; se/sp fields are NaN when `c` is absent.
CipwFamily cipw_family(const Cohort& cohort, const WeightKit& kit, std::optional<double> c, double t);

struct LiFamily {
  double se_np = 0.0, sp_np = 0.0, auc_np = 0.0, se_sp = 0.0, sp_sp = 0.0, auc_sp = 0.0;
};
/// `s_t_given_x` is a Cox fit with the score as the single covariate.
LiFamily li_estimators(const Cohort& cohort, const StepFunction& s_t, const CoxModel& s_t_given_x, double c, double t,
                       double trim_floor = 1e-6);

/// Right-censoring-only baselines: truncation is ignored. rc_cipw is NaN
/// without a conditional model.
std::pair<double, double> rc_baselines(const Cohort& cohort, const StepFunction& s_c_marginal,
                                       const CoxModel* s_c_given_z, double t, double trim_floor = 1e-6);

struct NuisanceOptions {
  FitConfig cox;
  GapPolicy gap_policy = GapPolicy::Bridge;
  double trim_floor = 1e-6;
  std::optional<double> tau;
};

/// Fitted nuisances for a set of estimators. The A/B letter of the scenario
/// selects the weight construction; marginal estimators use the marginal
/// nuisances and conditional ones the covariate models.
struct NuisanceSet {
  NuisanceSet(Scenario s, double trim_floor) : scenario(s), kit(s, trim_floor) {}

  Scenario scenario;
  WeightKit kit;
  std::optional<StepFunction> s_t, s_d, s_c, f_l;
  std::optional<CoxModel> s_t_given_z, s_d_given_z, s_c_given_z, s_t_given_x;
  std::optional<EntryDistribution> f_l_given_z;
  std::optional<StepFunction> rc_s_c;
  std::optional<CoxModel> rc_s_c_given_z;
  std::vector<std::string> warnings;
};

NuisanceSet fit_nuisances(const Cohort& cohort, Scenario scenario, std::span<const EstimatorId> estimators,
                          const NuisanceOptions& options = {});

/// AUC from the estimator's own closed form, clamped to [0,1]. `raw`
/// receives the pre-clamp value.
double estimate_auc(const Cohort& cohort, EstimatorId id, const NuisanceSet& nuisances, double t,
                    double* raw = nullptr);

/// Se/Sp over thresholds (default: unique scores with -inf/+inf sentinels)
/// plus the closed-form AUC.
RocResult roc_curve(const Cohort& cohort, EstimatorId id, const NuisanceSet& nuisances, double t,
                    std::optional<std::vector<double>> thresholds = std::nullopt);

/// Trapezoid area under the (1 - sp, se) points, for diagnostics only.
double trapezoid_auc(const RocResult& roc);

}  // namespace ltroc
