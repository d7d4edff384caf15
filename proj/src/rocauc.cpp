#include "ltroc/rocauc.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <functional>
#include <limits>

#include "ltroc/error.hpp"
#include "ltroc/kernels/pair_sum.hpp"
#include "ltroc/nonparam.hpp"

namespace ltroc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kNaN = std::numeric_limits<double>::quiet_NaN();

struct Weighted {
  std::vector<double> x, w;
  double total() const {
    double s = 0.0;
    for (double v : w) s += v;
    return s;
  }
};

template <class Pred, class Weight>
Weighted collect(const Cohort& cohort, Pred pred, Weight weight) {
  Weighted out;
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    if (!pred(i)) continue;
    out.x.push_back(cohort.score()[i]);
    out.w.push_back(weight(i));
  }
  return out;
}

double sum_above(const Weighted& s, double c) {
  double sum = 0.0;
  for (std::size_t k = 0; k < s.x.size(); ++k) {
    if (s.x[k] > c) sum += s.w[k];
  }
  return sum;
}

double sum_at_or_below(const Weighted& s, double c) {
  double sum = 0.0;
  for (std::size_t k = 0; k < s.x.size(); ++k) {
    if (s.x[k] <= c) sum += s.w[k];
  }
  return sum;
}

double pair_sum(const Weighted& a, const Weighted& b, kernels::PairOp op) {
  return kernels::pair_sum(a.x, a.w, b.x, b.w, op);
}

double ratio_auc(const Weighted& cases, const Weighted& controls) {
  const double denom = cases.total() * controls.total();
  if (!(denom > 0.0)) fail_estimation("empty comparable-pair set");
  return pair_sum(cases, controls, kernels::PairOp::Greater) / denom;
}

double clamp01(double v) { return std::clamp(v, 0.0, 1.0); }

// ---------------------------------------------------------------- REG-NP

double prevalence_complement(const StepFunction& s_t, double t, bool need_below_one) {
  const double s = s_t(t);
  if (!(s > 0.0) || (need_below_one && !(s < 1.0))) fail_estimation("degenerate prevalence at t");
  return s;
}

struct RegNpSets {
  Weighted cases, controls;  // event masses before/after t
  double s = 0.0;
};

RegNpSets reg_np_sets(const Cohort& cohort, const StepFunction& s_t, double t, bool need_below_one) {
  RegNpSets out;
  out.s = prevalence_complement(s_t, t, need_below_one);
  const auto mass = event_masses(cohort, s_t);
  auto time = cohort.time();
  auto event = cohort.event();
  out.cases = collect(cohort, [&](std::size_t i) { return event[i] && time[i] <= t; }, [&](std::size_t i) { return mass[i]; });
  out.controls = collect(cohort, [&](std::size_t i) { return event[i] && time[i] > t; }, [&](std::size_t i) { return mass[i]; });
  return out;
}

// ---------------------------------------------------------------- IPW sets

Weighted at_risk_controls(const Cohort& cohort, double t) {
  auto entry = cohort.entry();
  auto time = cohort.time();
  return collect(cohort, [&](std::size_t i) { return entry[i] < t && t < time[i]; }, [](std::size_t) { return 1.0; });
}

// Cases Delta_i = 1 with Ttilde_i < t (strict) or <= t, weight 1/k(i).
template <class K>
Weighted cases_by(const Cohort& cohort, double t, bool strict, K k) {
  auto time = cohort.time();
  auto event = cohort.event();
  return collect(
      cohort, [&](std::size_t i) { return event[i] && (strict ? time[i] < t : time[i] <= t); },
      [&](std::size_t i) { return 1.0 / k(i); });
}

template <class K>
Weighted controls_after(const Cohort& cohort, double t, K k) {
  auto time = cohort.time();
  return collect(cohort, [&](std::size_t i) { return time[i] > t; }, [&](std::size_t i) { return 1.0 / k(i); });
}

template <class K>
Weighted at_risk_weighted(const Cohort& cohort, double t, K k) {
  auto entry = cohort.entry();
  auto time = cohort.time();
  return collect(
      cohort, [&](std::size_t i) { return entry[i] < t && t < time[i]; }, [&](std::size_t i) { return 1.0 / k(i); });
}

double upper_ratio(const Weighted& s, double c, const char* empty_msg) {
  const double total = s.total();
  if (!(total > 0.0)) fail_estimation(empty_msg);
  return sum_above(s, c) / total;
}

double lower_ratio(const Weighted& s, double c, const char* empty_msg) {
  const double total = s.total();
  if (!(total > 0.0)) fail_estimation(empty_msg);
  return sum_at_or_below(s, c) / total;
}

constexpr const char* kNoEvents = "no events before t";
constexpr const char* kNoControls = "no records after t";
constexpr const char* kNoAtRisk = "empty at-risk set at t";

// ---------------------------------------------------------------- REG-SP

struct RegSpSets {
  Weighted cases, controls;
};

template <class Cov, class H>
RegSpSets reg_sp_sets(const Cohort& cohort, const CoxModel& model, double t, Cov cov, H h) {
  RegSpSets out;
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    const double lp = model.linear_predictor(cov(i));
    const double s = model.survival_lp(t, lp);
    const double hi = h(i);
    out.cases.x.push_back(cohort.score()[i]);
    out.cases.w.push_back((1.0 - s) / hi);
    out.controls.x.push_back(cohort.score()[i]);
    out.controls.w.push_back(s / hi);
  }
  if (!(out.cases.total() > 0.0) || !(out.controls.total() > 0.0)) {
    fail_estimation("all-zero denominator in semiparametric estimator at t");
  }
  return out;
}

RegSpSets reg_sp_z(const Cohort& cohort, const CoxModel& model, const WeightKit& kit, double t) {
  return reg_sp_sets(
      cohort, model, t, [&](std::size_t i) { return cohort.covariates(i); },
      [&](std::size_t i) { return kit.h(cohort.entry()[i], cohort.covariates(i)); });
}

RegSpSets reg_sp_x(const Cohort& cohort, const CoxModel& model, double t, const WeightKit& floor_kit) {
  auto score = cohort.score();
  return reg_sp_sets(
      cohort, model, t, [&](std::size_t i) { return std::span<const double>(score.data() + i, 1); },
      [&](std::size_t i) {
        return floor_kit.clamp(model.survival(cohort.entry()[i], std::span<const double>(score.data() + i, 1)));
      });
}

// ---------------------------------------------------------------- plans

// Se(c) = se_complement ? 1 - below(c)/se_norm : above(c)/se_norm
// Sp(c) = below(c)/sp_norm
struct Plan {
  Weighted se_set, sp_set;
  double se_norm = 0.0, sp_norm = 0.0;
  bool se_complement = false;
  const char* se_empty = kNoEvents;
  const char* sp_empty = kNoControls;
  double auc_raw = 0.0;
  double ess = 0.0;

  double se(double c) const {
    if (!(se_norm > 0.0)) fail_estimation(se_empty);
    return clamp01(se_complement ? 1.0 - sum_at_or_below(se_set, c) / se_norm : sum_above(se_set, c) / se_norm);
  }
  double sp(double c) const {
    if (!(sp_norm > 0.0)) fail_estimation(sp_empty);
    return clamp01(sum_at_or_below(sp_set, c) / sp_norm);
  }
};

void ratio_sets(Plan& p, Weighted se_set, Weighted sp_set) {
  p.se_norm = se_set.total();
  p.sp_norm = sp_set.total();
  p.se_set = std::move(se_set);
  p.sp_set = std::move(sp_set);
}

const WeightKit& require_kit(const NuisanceSet& n, bool conditional) {
  if (conditional ? !n.kit.has_conditional() : !n.kit.has_marginal()) {
    throw Error(ErrorKind::Usage, conditional ? "conditional weights missing from nuisance set"
                                              : "marginal weights missing from nuisance set");
  }
  return n.kit;
}

template <class T>
const T& require(const std::optional<T>& v, const char* what) {
  if (!v) throw Error(ErrorKind::Usage, std::string("nuisance missing: ") + what);
  return *v;
}

double li_np_auc(const Cohort& cohort, const StepFunction& s_t, double t) {
  const double s = prevalence_complement(s_t, t, true);
  const double n = static_cast<double>(cohort.size());
  const auto mass = event_masses(cohort, s_t);
  auto time = cohort.time();
  auto event = cohort.event();
  // Delta_i S(T_i-) / R(T_i) = n * mass_i
  Weighted cases =
      collect(cohort, [&](std::size_t i) { return event[i] && time[i] <= t; }, [&](std::size_t i) { return n * mass[i]; });
  Weighted controls = at_risk_controls(cohort, t);
  const double r_t = AtRiskProportion(cohort)(t);
  const double denom = n * n * r_t * (1.0 - s);
  if (!(denom > 0.0)) fail_estimation(kNoAtRisk);
  return 1.0 - pair_sum(cases, controls, kernels::PairOp::Less) / denom;
}

Plan build_plan(const Cohort& cohort, EstimatorId id, const NuisanceSet& nz, double t, bool with_curve) {
  Plan p;
  switch (id) {
    case EstimatorId::RegNp:
    case EstimatorId::LiNp: {
      const auto& s_t = require(nz.s_t, "S_T");
      auto sets = reg_np_sets(cohort, s_t, t, true);
      p.se_complement = true;
      p.se_norm = 1.0 - sets.s;
      p.sp_norm = sets.s;
      p.ess = effective_sample_size(sets.cases.w);
      if (id == EstimatorId::RegNp) {
        p.auc_raw = 1.0 - pair_sum(sets.cases, sets.controls, kernels::PairOp::LessEqual) / (sets.s * (1.0 - sets.s));
        p.se_set = std::move(sets.cases);
        p.sp_set = std::move(sets.controls);
      } else {
        p.auc_raw = li_np_auc(cohort, s_t, t);
        p.se_set = std::move(sets.cases);
        if (with_curve) {
          p.sp_set = at_risk_controls(cohort, t);
          p.sp_norm = p.sp_set.total();
          p.sp_empty = kNoAtRisk;
        }
      }
      break;
    }
    case EstimatorId::RegSp:
    case EstimatorId::LiSp: {
      RegSpSets sets = id == EstimatorId::RegSp
                           ? reg_sp_z(cohort, require(nz.s_t_given_z, "S_T|Z"), nz.kit, t)
                           : reg_sp_x(cohort, require(nz.s_t_given_x, "S_T|X"), t, nz.kit);
      p.auc_raw = ratio_auc(sets.cases, sets.controls);
      p.ess = effective_sample_size(sets.cases.w);
      ratio_sets(p, std::move(sets.cases), std::move(sets.controls));
      break;
    }
    case EstimatorId::Ipw1:
    case EstimatorId::Ipw2: {
      const WeightKit& kit = require_kit(nz, false);
      auto k1 = [&](std::size_t i) { return kit.k1(cohort.time()[i]); };
      Weighted cases = cases_by(cohort, t, false, k1);
      Weighted controls = id == EstimatorId::Ipw1
                              ? controls_after(cohort, t, [&](std::size_t i) { return kit.k2(t, cohort.time()[i]); })
                              : at_risk_controls(cohort, t);
      p.auc_raw = ratio_auc(cases, controls);
      p.ess = effective_sample_size(cases.w);
      if (with_curve) {
        ratio_sets(p, cases_by(cohort, t, true, k1), std::move(controls));
        if (id == EstimatorId::Ipw2) p.sp_empty = kNoAtRisk;
      }
      break;
    }
    case EstimatorId::Cipw1:
    case EstimatorId::Cipw2: {
      const WeightKit& kit = require_kit(nz, true);
      auto kc1 = [&](std::size_t i) { return kit.kc1(cohort.time()[i], cohort.covariates(i)); };
      Weighted cases = cases_by(cohort, t, false, kc1);
      Weighted controls =
          id == EstimatorId::Cipw1
              ? controls_after(cohort, t,
                               [&](std::size_t i) { return kit.kc2(t, cohort.time()[i], cohort.covariates(i)); })
              : at_risk_weighted(cohort, t, [&](std::size_t i) { return kit.kc1(t, cohort.covariates(i)); });
      p.auc_raw = ratio_auc(cases, controls);
      p.ess = effective_sample_size(cases.w);
      if (with_curve) {
        ratio_sets(p, cases_by(cohort, t, true, kc1), std::move(controls));
        if (id == EstimatorId::Cipw2) p.sp_empty = kNoAtRisk;
      }
      break;
    }
    case EstimatorId::RcIpw: {
      const auto& s_c = require(nz.rc_s_c, "S_C (no truncation)");
      auto k1 = [&](std::size_t i) { return nz.kit.clamp(s_c.left_limit(cohort.time()[i])); };
      const double k2 = nz.kit.clamp(s_c(t));
      Weighted cases = cases_by(cohort, t, false, k1);
      Weighted controls = controls_after(cohort, t, [&](std::size_t) { return k2; });
      p.auc_raw = ratio_auc(cases, controls);
      p.ess = effective_sample_size(cases.w);
      if (with_curve) ratio_sets(p, cases_by(cohort, t, true, k1), std::move(controls));
      break;
    }
    case EstimatorId::RcCipw: {
      const auto& s_c = require(nz.rc_s_c_given_z, "S_C|Z (no truncation)");
      auto k1 = [&](std::size_t i) { return nz.kit.clamp(s_c.survival_left(cohort.time()[i], cohort.covariates(i))); };
      Weighted cases = cases_by(cohort, t, false, k1);
      Weighted controls =
          controls_after(cohort, t, [&](std::size_t i) { return nz.kit.clamp(s_c.survival(t, cohort.covariates(i))); });
      p.auc_raw = ratio_auc(cases, controls);
      p.ess = effective_sample_size(cases.w);
      if (with_curve) ratio_sets(p, cases_by(cohort, t, true, k1), std::move(controls));
      break;
    }
  }
  return p;
}

CoxModel degenerate_model(const Cohort& cohort, SurvivalForm form) {
  return CoxModel(std::vector<double>(cohort.num_covariates(), 0.0), StepFunction::constant(0.0),
                  cohort.covariate_names(), form);
}

}  // namespace

// ---------------------------------------------------------------- names

EstimatorId parse_estimator(std::string_view name) {
  std::string key;
  for (char ch : name) {
    if (ch == '-' || ch == '_' || ch == ' ') continue;
    key.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  }
  static const std::pair<const char*, EstimatorId> table[] = {
      {"regnp", EstimatorId::RegNp}, {"regsp", EstimatorId::RegSp},   {"ipw1", EstimatorId::Ipw1},
      {"ipw", EstimatorId::Ipw1},    {"ipw2", EstimatorId::Ipw2},     {"cipw1", EstimatorId::Cipw1},
      {"cipw", EstimatorId::Cipw1},  {"cipw2", EstimatorId::Cipw2},   {"linp", EstimatorId::LiNp},
      {"lisp", EstimatorId::LiSp},   {"rcipw", EstimatorId::RcIpw},   {"rccipw", EstimatorId::RcCipw},
  };
  for (const auto& [k, id] : table) {
    if (key == k) return id;
  }
  throw Error(ErrorKind::Usage, "unknown estimator '" + std::string(name) + "'");
}

std::vector<EstimatorId> parse_estimator_list(std::string_view list) {
  std::vector<EstimatorId> out;
  for (const auto& item : split_list(list)) {
    const EstimatorId id = parse_estimator(item);
    if (std::find(out.begin(), out.end(), id) == out.end()) out.push_back(id);
  }
  if (out.empty()) throw Error(ErrorKind::Usage, "no estimators given");
  return out;
}

std::string to_string(EstimatorId id) {
  switch (id) {
    case EstimatorId::RegNp: return "reg-np";
    case EstimatorId::RegSp: return "reg-sp";
    case EstimatorId::Ipw1: return "ipw1";
    case EstimatorId::Ipw2: return "ipw2";
    case EstimatorId::Cipw1: return "cipw1";
    case EstimatorId::Cipw2: return "cipw2";
    case EstimatorId::LiNp: return "li-np";
    case EstimatorId::LiSp: return "li-sp";
    case EstimatorId::RcIpw: return "rc-ipw";
    case EstimatorId::RcCipw: return "rc-cipw";
  }
  return "?";
}

const std::vector<EstimatorId>& all_estimators() {
  static const std::vector<EstimatorId> all = {EstimatorId::RegNp, EstimatorId::RegSp, EstimatorId::Ipw1,
                                               EstimatorId::Ipw2,  EstimatorId::Cipw1, EstimatorId::Cipw2,
                                               EstimatorId::LiNp,  EstimatorId::LiSp,  EstimatorId::RcIpw,
                                               EstimatorId::RcCipw};
  return all;
}

bool needs_conditional_weights(EstimatorId id) { return id == EstimatorId::Cipw1 || id == EstimatorId::Cipw2; }

// ---------------------------------------------------------------- public ops

double se_reg_np(const Cohort& cohort, const StepFunction& s_t, double c, double t) {
  auto sets = reg_np_sets(cohort, s_t, t, true);
  return clamp01(1.0 - sum_at_or_below(sets.cases, c) / (1.0 - sets.s));
}

double sp_reg_np(const Cohort& cohort, const StepFunction& s_t, double c, double t) {
  auto sets = reg_np_sets(cohort, s_t, t, false);
  return clamp01(sum_at_or_below(sets.controls, c) / sets.s);
}

double auc_reg_np(const Cohort& cohort, const StepFunction& s_t, double t) {
  auto sets = reg_np_sets(cohort, s_t, t, true);
  return clamp01(1.0 - pair_sum(sets.cases, sets.controls, kernels::PairOp::LessEqual) / (sets.s * (1.0 - sets.s)));
}

SeSpAuc se_sp_auc_reg_sp(const Cohort& cohort, const CoxModel& s_t_given_z, const WeightKit& kit, double c, double t) {
  auto sets = reg_sp_z(cohort, s_t_given_z, kit, t);
  return {sum_above(sets.cases, c) / sets.cases.total(), sum_at_or_below(sets.controls, c) / sets.controls.total(),
          clamp01(ratio_auc(sets.cases, sets.controls))};
}

double se_ipw(const Cohort& cohort, const WeightKit& kit, double c, double t) {
  return upper_ratio(cases_by(cohort, t, true, [&](std::size_t i) { return kit.k1(cohort.time()[i]); }), c, kNoEvents);
}

double sp_ipw1(const Cohort& cohort, const WeightKit& kit, double c, double t) {
  return lower_ratio(controls_after(cohort, t, [&](std::size_t i) { return kit.k2(t, cohort.time()[i]); }), c,
                     kNoControls);
}

double auc_ipw1(const Cohort& cohort, const WeightKit& kit, double t) {
  Weighted cases = cases_by(cohort, t, false, [&](std::size_t i) { return kit.k1(cohort.time()[i]); });
  Weighted controls = controls_after(cohort, t, [&](std::size_t i) { return kit.k2(t, cohort.time()[i]); });
  return clamp01(ratio_auc(cases, controls));
}

double sp_ipw2(const Cohort& cohort, double c, double t) { return lower_ratio(at_risk_controls(cohort, t), c, kNoAtRisk); }

double auc_ipw2(const Cohort& cohort, const WeightKit& kit, double t) {
  Weighted cases = cases_by(cohort, t, false, [&](std::size_t i) { return kit.k1(cohort.time()[i]); });
  return clamp01(ratio_auc(cases, at_risk_controls(cohort, t)));
}

CipwFamily cipw_family(const Cohort& cohort, const WeightKit& kit, std::optional<double> c, double t) {
  auto kc1 = [&](std::size_t i) { return kit.kc1(cohort.time()[i], cohort.covariates(i)); };
  Weighted cases = cases_by(cohort, t, false, kc1);
  Weighted ctrl1 =
      controls_after(cohort, t, [&](std::size_t i) { return kit.kc2(t, cohort.time()[i], cohort.covariates(i)); });
  Weighted ctrl2 = at_risk_weighted(cohort, t, [&](std::size_t i) { return kit.kc1(t, cohort.covariates(i)); });
  CipwFamily out;
  out.auc_cipw1 = clamp01(ratio_auc(cases, ctrl1));
  out.auc_cipw2 = clamp01(ratio_auc(cases, ctrl2));
  if (c) {
    out.se_cipw = upper_ratio(cases_by(cohort, t, true, kc1), *c, kNoEvents);
    out.sp_cipw1 = lower_ratio(ctrl1, *c, kNoControls);
    out.sp_cipw2 = lower_ratio(ctrl2, *c, kNoAtRisk);
  } else {
    out.se_cipw = out.sp_cipw1 = out.sp_cipw2 = kNaN;
  }
  return out;
}

LiFamily li_estimators(const Cohort& cohort, const StepFunction& s_t, const CoxModel& s_t_given_x, double c, double t,
                       double trim_floor) {
  LiFamily out;
  out.se_np = se_reg_np(cohort, s_t, c, t);
  out.sp_np = sp_ipw2(cohort, c, t);
  out.auc_np = clamp01(li_np_auc(cohort, s_t, t));
  const WeightKit floor_kit(Scenario::A2, trim_floor);
  auto sets = reg_sp_x(cohort, s_t_given_x, t, floor_kit);
  out.se_sp = sum_above(sets.cases, c) / sets.cases.total();
  out.sp_sp = sum_at_or_below(sets.controls, c) / sets.controls.total();
  out.auc_sp = clamp01(ratio_auc(sets.cases, sets.controls));
  return out;
}

std::pair<double, double> rc_baselines(const Cohort& cohort, const StepFunction& s_c_marginal,
                                       const CoxModel* s_c_given_z, double t, double trim_floor) {
  const WeightKit floor_kit(Scenario::B1, trim_floor);
  const double k2 = floor_kit.clamp(s_c_marginal(t));
  Weighted cases =
      cases_by(cohort, t, false, [&](std::size_t i) { return floor_kit.clamp(s_c_marginal.left_limit(cohort.time()[i])); });
  const double rc_ipw = clamp01(ratio_auc(cases, controls_after(cohort, t, [&](std::size_t) { return k2; })));
  double rc_cipw = kNaN;
  if (s_c_given_z != nullptr) {
    Weighted zc = cases_by(cohort, t, false, [&](std::size_t i) {
      return floor_kit.clamp(s_c_given_z->survival_left(cohort.time()[i], cohort.covariates(i)));
    });
    Weighted zk = controls_after(
        cohort, t, [&](std::size_t i) { return floor_kit.clamp(s_c_given_z->survival(t, cohort.covariates(i))); });
    rc_cipw = clamp01(ratio_auc(zc, zk));
  }
  return {rc_ipw, rc_cipw};
}

// ---------------------------------------------------------------- nuisances

NuisanceSet fit_nuisances(const Cohort& cohort, Scenario scenario, std::span<const EstimatorId> estimators,
                          const NuisanceOptions& options) {
  NuisanceSet nz(scenario, options.trim_floor);
  auto wants = [&](std::initializer_list<EstimatorId> ids) {
    for (EstimatorId id : ids) {
      if (std::find(estimators.begin(), estimators.end(), id) != estimators.end()) return true;
    }
    return false;
  };
  const bool type_a = censoring_after_entry(scenario);
  const bool need_marginal = wants({EstimatorId::Ipw1, EstimatorId::Ipw2});
  const bool need_conditional = wants({EstimatorId::Cipw1, EstimatorId::Cipw2});
  const bool need_stz = wants({EstimatorId::RegSp});
  bool any_censored = false;
  for (auto e : cohort.event()) any_censored |= e == 0;

  auto km = [&](const Cohort& c, Target target, const char* what) {
    int gaps = 0;
    StepFunction f = km_truncated(c, target, options.gap_policy, &gaps);
    if (gaps > 0) nz.warnings.push_back(std::string(what) + ": bridged " + std::to_string(gaps) + " risk-set gap(s)");
    return f;
  };
  if (need_marginal || wants({EstimatorId::RegNp, EstimatorId::LiNp})) nz.s_t = km(cohort, Target::Event, "S_T");
  if (need_marginal) {
    if (type_a) {
      nz.s_d = km_residual_censoring(cohort);
      nz.f_l = fl_marginal(cohort, *nz.s_t, nullptr, scenario);
    } else {
      if (any_censored) {
        nz.s_c = km(cohort, Target::Censoring, "S_C");
      } else {
        nz.s_c = StepFunction::constant(1.0);
        nz.warnings.push_back("no censored records: S_C set to 1");
      }
      nz.f_l = fl_marginal(cohort, *nz.s_t, &*nz.s_c, scenario);
    }
    const StepFunction* s_d = nz.s_d ? &*nz.s_d : nullptr;
    const StepFunction* s_c = nz.s_c ? &*nz.s_c : nullptr;
    nz.kit.set_marginal(build_k1(scenario, *nz.f_l, s_d, s_c), build_k2(scenario, *nz.f_l, s_d, s_c));
  }
  if (need_conditional || (need_stz && !type_a)) {
    if (type_a) {
      nz.s_d_given_z = fit_residual_censoring(cohort, options.cox);
    } else if (any_censored) {
      nz.s_c_given_z = fit_cox_ltrc(cohort, Target::Censoring, options.cox);
    } else {
      nz.s_c_given_z = degenerate_model(cohort, options.cox.form);
    }
  }
  if (need_conditional) {
    const CoxModel* sd = nz.s_d_given_z ? &*nz.s_d_given_z : nullptr;
    const CoxModel* sc = nz.s_c_given_z ? &*nz.s_c_given_z : nullptr;
    nz.f_l_given_z = fit_entry_distribution(cohort, scenario, sd, options.cox, options.tau);
    nz.kit.set_conditional(build_kc(scenario, *nz.f_l_given_z, sd, sc));
  }
  if (need_stz) {
    nz.s_t_given_z = fit_cox_ltrc(cohort, Target::Event, options.cox);
    nz.kit.set_h(build_h(scenario, *nz.s_t_given_z, nz.s_c_given_z ? &*nz.s_c_given_z : nullptr));
  }
  if (wants({EstimatorId::LiSp})) {
    std::vector<double> x(cohort.score().begin(), cohort.score().end());
    nz.s_t_given_x = fit_cox_ltrc(cohort.with_covariates(std::move(x), {"x"}), Target::Event, options.cox);
  }
  if (wants({EstimatorId::RcIpw, EstimatorId::RcCipw})) {
    const Cohort untruncated = cohort.without_truncation();
    if (wants({EstimatorId::RcIpw})) {
      nz.rc_s_c = any_censored ? km(untruncated, Target::Censoring, "S_C (no truncation)") : StepFunction::constant(1.0);
    }
    if (wants({EstimatorId::RcCipw})) {
      nz.rc_s_c_given_z = any_censored ? fit_cox_ltrc(untruncated, Target::Censoring, options.cox)
                                       : degenerate_model(cohort, options.cox.form);
    }
  }
  for (const auto& w : validate_scenario(cohort, scenario)) nz.warnings.push_back(w);
  return nz;
}

double estimate_auc(const Cohort& cohort, EstimatorId id, const NuisanceSet& nuisances, double t, double* raw) {
  const Plan p = build_plan(cohort, id, nuisances, t, false);
  if (raw) *raw = p.auc_raw;
  return clamp01(p.auc_raw);
}

RocResult roc_curve(const Cohort& cohort, EstimatorId id, const NuisanceSet& nuisances, double t,
                    std::optional<std::vector<double>> thresholds) {
  const Plan p = build_plan(cohort, id, nuisances, t, true);
  RocResult out;
  out.estimator = id;
  out.t = t;
  if (thresholds) {
    out.thresholds = std::move(*thresholds);
    std::sort(out.thresholds.begin(), out.thresholds.end());
  } else {
    out.thresholds.assign(cohort.score().begin(), cohort.score().end());
    std::sort(out.thresholds.begin(), out.thresholds.end());
    out.thresholds.erase(std::unique(out.thresholds.begin(), out.thresholds.end()), out.thresholds.end());
    out.thresholds.insert(out.thresholds.begin(), -kInf);
    out.thresholds.push_back(kInf);
  }
  for (double c : out.thresholds) {
    if (c == -kInf) {
      out.se.push_back(1.0);
      out.sp.push_back(0.0);
    } else if (c == kInf) {
      out.se.push_back(0.0);
      out.sp.push_back(1.0);
    } else {
      out.se.push_back(p.se(c));
      out.sp.push_back(p.sp(c));
    }
  }
  out.auc_raw = p.auc_raw;
  out.auc = clamp01(p.auc_raw);
  out.ess = p.ess;
  return out;
}

double trapezoid_auc(const RocResult& roc) {
  // points ordered by decreasing 1 - sp as thresholds rise
  double area = 0.0;
  for (std::size_t k = 1; k < roc.thresholds.size(); ++k) {
    const double dx = (1.0 - roc.sp[k - 1]) - (1.0 - roc.sp[k]);
    area += dx * 0.5 * (roc.se[k - 1] + roc.se[k]);
  }
  return area;
}

}  // namespace ltroc
