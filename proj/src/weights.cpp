#include "ltroc/weights.hpp"

#include <algorithm>
#include <atomic>
#include <vector>

#include "ltroc/error.hpp"

namespace ltroc {

namespace {

struct Atom {
  double at, mass;
};

std::vector<Atom> atoms_of(const StepFunction& f) {
  std::vector<Atom> out;
  double prev = f.left_value();
  auto knots = f.knots();
  auto values = f.values();
  for (std::size_t k = 0; k < knots.size(); ++k) {
    if (values[k] != prev) out.push_back({knots[k], values[k] - prev});
    prev = values[k];
  }
  return out;
}

// sum_{s_j < u} S(x - s_j) dF(s_j) with S = 1 on x <= 0
double stieltjes(const std::vector<Atom>& atoms, double u, double x, const StepFunction& s_d) {
  double sum = 0.0;
  for (const Atom& a : atoms) {
    if (a.at >= u) break;
    const double arg = x - a.at;
    sum += (arg <= 0.0 ? 1.0 : s_d(arg)) * a.mass;
  }
  return sum;
}

void require(bool ok, const char* what) {
  if (!ok) throw Error(ErrorKind::Usage, what);
}

}  // namespace

MarginalK1 build_k1(Scenario scenario, const StepFunction& f_l, const StepFunction* s_d, const StepFunction* s_c) {
  if (censoring_after_entry(scenario)) {
    require(s_d != nullptr, "A-scenario K1 requires S_D");
    auto atoms = std::make_shared<std::vector<Atom>>(atoms_of(f_l));
    auto sd = std::make_shared<StepFunction>(*s_d);
    return [atoms, sd](double u) { return stieltjes(*atoms, u, u, *sd); };
  }
  require(s_c != nullptr, "B-scenario K1 requires S_C");
  auto fl = std::make_shared<StepFunction>(f_l);
  auto sc = std::make_shared<StepFunction>(*s_c);
  return [fl, sc](double u) { return (*sc)(u) * fl->left_limit(u); };
}

MarginalK2 build_k2(Scenario scenario, const StepFunction& f_l, const StepFunction* s_d, const StepFunction* s_c) {
  if (censoring_after_entry(scenario)) {
    require(s_d != nullptr, "A-scenario K2 requires S_D");
    auto atoms = std::make_shared<std::vector<Atom>>(atoms_of(f_l));
    auto sd = std::make_shared<StepFunction>(*s_d);
    return [atoms, sd](double t, double u) { return stieltjes(*atoms, u, t, *sd); };
  }
  require(s_c != nullptr, "B-scenario K2 requires S_C");
  auto fl = std::make_shared<StepFunction>(f_l);
  auto sc = std::make_shared<StepFunction>(*s_c);
  return [fl, sc](double t, double u) { return (*sc)(t) * fl->left_limit(u); };
}

ConditionalPair build_kc(Scenario scenario, const EntryDistribution& f_l_given_z, const CoxModel* s_d_given_z,
                         const CoxModel* s_c_given_z) {
  auto fl = std::make_shared<EntryDistribution>(f_l_given_z);
  if (censoring_after_entry(scenario)) {
    require(s_d_given_z != nullptr, "A-scenario K_C requires S_D|Z");
    auto sd = std::make_shared<CoxModel>(*s_d_given_z);
    auto integral = [fl, sd](double x, double u, std::span<const double> z) {
      const double lp = sd->linear_predictor(z);
      double sum = 0.0;
      for (const auto& [at, mass] : fl->atoms(z)) {
        if (at >= u) break;
        const double arg = x - at;
        sum += (arg <= 0.0 ? 1.0 : sd->survival_lp(arg, lp)) * mass;
      }
      return sum;
    };
    return {[integral](double u, std::span<const double> z) { return integral(u, u, z); },
            [integral](double t, double u, std::span<const double> z) { return integral(t, u, z); }};
  }
  require(s_c_given_z != nullptr, "B-scenario K_C requires S_C|Z");
  auto sc = std::make_shared<CoxModel>(*s_c_given_z);
  return {[fl, sc](double u, std::span<const double> z) { return sc->survival(u, z) * fl->cdf_left(u, z); },
          [fl, sc](double t, double u, std::span<const double> z) { return sc->survival(t, z) * fl->cdf_left(u, z); }};
}

HFunction build_h(Scenario scenario, const CoxModel& s_t_given_z, const CoxModel* s_c_given_z) {
  auto st = std::make_shared<CoxModel>(s_t_given_z);
  if (censoring_after_entry(scenario)) {
    return [st](double u, std::span<const double> z) { return st->survival(u, z); };
  }
  require(s_c_given_z != nullptr, "B-scenario H requires S_C|Z");
  auto sc = std::make_shared<CoxModel>(*s_c_given_z);
  return [st, sc](double u, std::span<const double> z) { return st->survival(u, z) * sc->survival(u, z); };
}

// ---------------------------------------------------------------- WeightKit

struct WeightKit::Counter {
  std::atomic<long> clamped{0};
  std::atomic<double> min_raw{1.0};
};

WeightKit::WeightKit(Scenario scenario, double trim_floor)
    : scenario_(scenario), floor_(trim_floor), counter_(std::make_shared<Counter>()) {
  if (!(trim_floor > 0.0 && trim_floor < 1.0)) throw Error(ErrorKind::Usage, "trim_floor must lie in (0,1)");
}

void WeightKit::set_marginal(MarginalK1 k1, MarginalK2 k2) {
  k1_ = std::move(k1);
  k2_ = std::move(k2);
}

void WeightKit::set_conditional(ConditionalPair kc) {
  kc1_ = std::move(kc.kc1);
  kc2_ = std::move(kc.kc2);
}

void WeightKit::set_h(HFunction h) { h_ = std::move(h); }

double WeightKit::clamp(double raw) const {
  double seen = counter_->min_raw.load(std::memory_order_relaxed);
  while (raw < seen && !counter_->min_raw.compare_exchange_weak(seen, raw, std::memory_order_relaxed)) {
  }
  if (!(raw >= floor_)) {
    counter_->clamped.fetch_add(1, std::memory_order_relaxed);
    return floor_;
  }
  return std::min(raw, 1.0);
}

double WeightKit::k1(double u) const {
  if (!k1_) fail_estimation("marginal weights not built");
  return clamp(k1_(u));
}

double WeightKit::k2(double t, double u) const {
  if (!k2_) fail_estimation("marginal weights not built");
  return clamp(k2_(t, u));
}

double WeightKit::kc1(double u, std::span<const double> z) const {
  if (!kc1_) fail_estimation("conditional weights not built");
  return clamp(kc1_(u, z));
}

double WeightKit::kc2(double t, double u, std::span<const double> z) const {
  if (!kc2_) fail_estimation("conditional weights not built");
  return clamp(kc2_(t, u, z));
}

double WeightKit::h(double u, std::span<const double> z) const {
  if (!h_) fail_estimation("H not built");
  return clamp(h_(u, z));
}

WeightStats WeightKit::stats() const {
  return {counter_->clamped.load(), counter_->min_raw.load()};
}

void WeightKit::reset_stats() const {
  counter_->clamped.store(0);
  counter_->min_raw.store(1.0);
}

double effective_sample_size(std::span<const double> w) {
  if (w.empty()) return 0.0;
  double sum = 0.0, top = 0.0;
  for (double x : w) {
    sum += x;
    top = std::max(top, x);
  }
  return top > 0.0 ? sum / top : 0.0;
}

}  // namespace ltroc
