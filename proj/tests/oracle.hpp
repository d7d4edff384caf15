#pragma once

// Direct-from-formula reimplementations used as test oracles. Everything here
// is written with plain loops over records and shares no code with the
// library beyond the data containers.

#include <cstdint>
#include <random>
#include <vector>

#include "ltroc/cohort.hpp"
#include "ltroc/condsurv.hpp"

namespace oracle {

struct Rec {
  double l, t;
  bool d;
  double x;
  std::vector<double> z;
};

std::vector<Rec> records(const ltroc::Cohort& c);
ltroc::Cohort make_cohort(const std::vector<Rec>& recs, std::vector<std::string> names = {});

/// Product-limit curve kept as (failure time, factor) pairs.
struct Pl {
  std::vector<std::pair<double, double>> factors;
  double at(double u) const;    // S(u)
  double left(double u) const;  // S(u-)
};

/// Risk set {L < u <= T}; with `censoring` the failures are Delta = 0 and
/// records with an event at u leave first. A factor of zero is skipped when
/// later failures exist.
Pl km(const std::vector<Rec>& r, bool censoring);
/// KM of D = T - L, everyone observed from 0, censorings as failures.
Pl km_residual(const std::vector<Rec>& r);
double at_risk(const std::vector<Rec>& r, double u);  // Rhat(u)

/// Entry distribution as (location, mass) atoms, sorted.
using Atoms = std::vector<std::pair<double, double>>;
Atoms fl_marginal(const std::vector<Rec>& r, const Pl& s_t, const Pl* s_c);
double cdf_left(const Atoms& a, double u);

/// Hand-specified proportional-hazards model, exponential form.
struct Ph {
  std::vector<double> beta;
  std::vector<double> knots, cumhaz;  // Lambda0 jumps to cumhaz[k] at knots[k]
  double lp(const std::vector<double>& z) const;
  double lambda(double t) const;
  double lambda_left(double t) const;
  double s(double t, const std::vector<double>& z) const;
  double s_left(double t, const std::vector<double>& z) const;
  ltroc::CoxModel model(std::vector<std::string> names) const;
};

/// F(s|z) atoms from a reverse-time model at horizon tau.
Atoms entry_atoms(const Ph& rev, double tau, const std::vector<double>& z);

double floor_w(double v, double floor = 1e-6);

// AUC / Se / Sp formulas. `k1`, `k2` are callables on records.
struct SeSpAuc {
  double se, sp, auc;
};

double reg_np_se(const std::vector<Rec>& r, const Pl& s, double c, double t);
double reg_np_sp(const std::vector<Rec>& r, const Pl& s, double c, double t);
double reg_np_auc(const std::vector<Rec>& r, const Pl& s, double t);
double li_np_auc(const std::vector<Rec>& r, const Pl& s, double t);

/// Empirical estimators for uncensored, untruncated data.
double emp_se(const std::vector<Rec>& r, double c, double t);
double emp_sp(const std::vector<Rec>& r, double c, double t);
double emp_auc(const std::vector<Rec>& r, double t);

/// Random LTRC cohort with small n, continuous times, two covariates.
std::vector<Rec> random_small(std::mt19937_64& rng, int n, bool b_type);
/// Untruncated, uncensored cohort with random scores.
std::vector<Rec> random_complete(std::mt19937_64& rng, int n, int p);

}  // namespace oracle
