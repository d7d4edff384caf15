#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>

#include "ltroc/cohort.hpp"
#include "ltroc/condsurv.hpp"
#include "ltroc/step_function.hpp"

namespace ltroc {

using MarginalK1 = std::function<double(double)>;
using MarginalK2 = std::function<double(double, double)>;
using ConditionalK1 = std::function<double(double, std::span<const double>)>;
using ConditionalK2 = std::function<double(double, double, std::span<const double>)>;
using HFunction = std::function<double(double, std::span<const double>)>;

/// Raw weight builders. They return unclamped probabilities; WeightKit applies
/// the floor.
///
/// K1(u) estimates P(L < u, C > u | T = u) and K2(t, u) estimates
/// P(L < u, C > t | T = u). Integrals over the entry distribution include only
/// atoms strictly below u, and S_D(x) = 1 for x <= 0.
MarginalK1 build_k1(Scenario scenario, const StepFunction& f_l, const StepFunction* s_d, const StepFunction* s_c);
MarginalK2 build_k2(Scenario scenario, const StepFunction& f_l, const StepFunction* s_d, const StepFunction* s_c);

struct ConditionalPair {
  ConditionalK1 kc1;
  ConditionalK2 kc2;
};
ConditionalPair build_kc(Scenario scenario, const EntryDistribution& f_l_given_z, const CoxModel* s_d_given_z,
                         const CoxModel* s_c_given_z);

/// H(u,z) = S_T|Z(u|z), times S_C|Z(u|z) under B-scenarios.
HFunction build_h(Scenario scenario, const CoxModel& s_t_given_z, const CoxModel* s_c_given_z);

struct WeightStats {
  long clamped = 0;
  double min_raw = 1.0;  // smallest value seen before clamping
};

/// Bundle of weight functions evaluated through a common floor. Copies share
/// one clamp counter.
class WeightKit {
 public:
  explicit WeightKit(Scenario scenario, double trim_floor = 1e-6);

  Scenario scenario() const { return scenario_; }
  double trim_floor() const { return floor_; }

  void set_marginal(MarginalK1 k1, MarginalK2 k2);
  void set_conditional(ConditionalPair kc);
  void set_h(HFunction h);
  bool has_marginal() const { return bool(k1_); }
  bool has_conditional() const { return bool(kc1_); }
  bool has_h() const { return bool(h_); }

  double k1(double u) const;
  double k2(double t, double u) const;
  double kc1(double u, std::span<const double> z) const;
  double kc2(double t, double u, std::span<const double> z) const;
  double h(double u, std::span<const double> z) const;

  /// Applies the floor to an externally computed probability, counting it.
  double clamp(double raw) const;

  WeightStats stats() const;
  void reset_stats() const;

 private:

  struct Counter;
  Scenario scenario_;
  double floor_;
  MarginalK1 k1_;
  MarginalK2 k2_;
  ConditionalK1 kc1_;
  ConditionalK2 kc2_;
  HFunction h_;
  std::shared_ptr<Counter> counter_;
};

/// Sum(w) / max(w); 0 for an empty set.
double effective_sample_size(std::span<const double> w);

}  // namespace ltroc
