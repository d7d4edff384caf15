#include "ltroc/condsurv.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "ltroc/error.hpp"

namespace ltroc {

namespace {

double max_abs(std::span<const double> v) {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

}  // namespace

// ---------------------------------------------------------------- CoxModel

CoxModel::CoxModel(std::vector<double> beta, StepFunction cumhaz, std::vector<std::string> names, SurvivalForm form)
    : beta_(std::move(beta)), cumhaz_(std::move(cumhaz)), names_(std::move(names)), form_(form) {
  std::vector<double> knots(cumhaz_.knots().begin(), cumhaz_.knots().end()), prod;
  prod.reserve(knots.size());
  double s = 1.0, prev = cumhaz_.left_value();
  auto values = cumhaz_.values();
  for (std::size_t k = 0; k < values.size(); ++k) {
    const double factor = 1.0 - (values[k] - prev);
    // a factor <= 0 before the last knot is a gap in the risk set; bridge it
    // as the truncated Kaplan-Meier does
    if (factor > 0.0) {
      s *= factor;
    } else if (k + 1 == values.size()) {
      s = 0.0;
    }
    prev = values[k];
    prod.push_back(s);
  }
  product_ = StepFunction(std::move(knots), std::move(prod), 1.0);
}

double CoxModel::linear_predictor(std::span<const double> z) const {
  if (z.size() != beta_.size()) {
    throw Error(ErrorKind::Estimation, "covariate dimension mismatch: model has " + std::to_string(beta_.size()) +
                                           ", got " + std::to_string(z.size()));
  }
  double lp = 0.0;
  for (std::size_t k = 0; k < z.size(); ++k) lp += z[k] * beta_[k];
  return lp;
}

double CoxModel::from_baseline(double cumhaz, double product_surv, double lp) const {
  if (form_ == SurvivalForm::Exponential) return std::exp(-cumhaz * std::exp(lp));
  if (product_surv <= 0.0) return 0.0;
  return std::pow(product_surv, std::exp(lp));
}

double CoxModel::survival_lp(double t, double lp) const {
  if (t <= 0.0) return 1.0;
  return from_baseline(cumhaz_(t), product_(t), lp);
}

double CoxModel::survival_left_lp(double t, double lp) const {
  if (t <= 0.0) return 1.0;
  return from_baseline(cumhaz_.left_limit(t), product_.left_limit(t), lp);
}

double CoxModel::survival(double t, std::span<const double> z) const { return survival_lp(t, linear_predictor(z)); }

double CoxModel::survival_left(double t, std::span<const double> z) const {
  return survival_left_lp(t, linear_predictor(z));
}

// ------------------------------------------------------- PartialLikelihood

PartialLikelihood::PartialLikelihood(const SurvivalData& data) : d_(data) {
  const std::size_t n = d_.exit.size();
  by_exit_.resize(n);
  by_entry_.resize(n);
  std::iota(by_exit_.begin(), by_exit_.end(), 0);
  std::iota(by_entry_.begin(), by_entry_.end(), 0);
  std::sort(by_exit_.begin(), by_exit_.end(), [&](auto a, auto b) { return d_.exit[a] > d_.exit[b]; });
  std::sort(by_entry_.begin(), by_entry_.end(), [&](auto a, auto b) { return d_.entry[a] > d_.entry[b]; });
  for (std::size_t i : by_exit_) {
    if (d_.failure[i] && (fail_times_.empty() || fail_times_.back() != d_.exit[i])) fail_times_.push_back(d_.exit[i]);
  }
  mean_.assign(d_.p, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < d_.p; ++k) mean_[k] += d_.z[i * d_.p + k];
  }
  for (auto& m : mean_) m /= static_cast<double>(std::max<std::size_t>(n, 1));
}

double PartialLikelihood::evaluate(std::span<const double> beta, std::vector<double>* grad,
                                   std::vector<double>* neg_hess) const {
  const std::size_t n = d_.exit.size(), p = d_.p;
  std::vector<double> zc(n * p), r(n);
  for (std::size_t i = 0; i < n; ++i) {
    double eta = 0.0;
    for (std::size_t k = 0; k < p; ++k) {
      zc[i * p + k] = d_.z[i * p + k] - mean_[k];
      eta += zc[i * p + k] * beta[k];
    }
    r[i] = d_.weight[i] * std::exp(eta);
  }
  const bool want_d = grad != nullptr;
  std::vector<double> a1(p, 0.0), a2(p * p, 0.0), b1(p, 0.0), b2(p * p, 0.0);
  double a0 = 0.0, b0 = 0.0;
  auto add = [&](std::size_t i, double& s0, std::vector<double>& s1, std::vector<double>& s2, double sign) {
    s0 += sign * r[i];
    if (!want_d) return;
    for (std::size_t k = 0; k < p; ++k) {
      const double v = sign * r[i] * zc[i * p + k];
      s1[k] += v;
      for (std::size_t l = 0; l < p; ++l) s2[k * p + l] += v * zc[i * p + l];
    }
  };
  if (grad) grad->assign(p, 0.0);
  if (neg_hess) neg_hess->assign(p * p, 0.0);

  double loglik = 0.0;
  std::size_t pa = 0, pb = 0, pf = 0;
  std::vector<double> s1(p), s2(p * p);
  for (double u : fail_times_) {
    while (pa < n && d_.exit[by_exit_[pa]] >= u) add(by_exit_[pa++], a0, a1, a2, 1.0);
    while (pb < n && d_.entry[by_entry_[pb]] >= u) add(by_entry_[pb++], b0, b1, b2, 1.0);
    double s0 = a0 - b0;
    for (std::size_t k = 0; k < p; ++k) s1[k] = a1[k] - b1[k];
    for (std::size_t k = 0; k < p * p; ++k) s2[k] = a2[k] - b2[k];
    // records exiting at u; failures among them, and non-failures to exclude
    double dw = 0.0;
    std::vector<double> zsum(p, 0.0);
    for (std::size_t q = pf; q < n && d_.exit[by_exit_[q]] >= u; ++q) {
      const std::size_t i = by_exit_[q];
      if (d_.exit[i] != u) continue;
      if (d_.failure[i]) {
        dw += d_.weight[i];
        double eta = 0.0;
        for (std::size_t k = 0; k < p; ++k) {
          eta += zc[i * p + k] * beta[k];
          zsum[k] += d_.weight[i] * zc[i * p + k];
        }
        loglik += d_.weight[i] * eta;
      } else if (d_.exclude_tied_nonfailures) {
        add(i, s0, s1, s2, -1.0);
      }
    }
    pf = pa;
    if (!(s0 > 1e-12 * a0)) {
      // cancellation guard: recompute the risk-set sums directly
      s0 = 0.0;
      std::fill(s1.begin(), s1.end(), 0.0);
      std::fill(s2.begin(), s2.end(), 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        const bool tied_out = d_.exclude_tied_nonfailures && d_.exit[i] == u && !d_.failure[i];
        if (d_.entry[i] < u && u <= d_.exit[i] && !tied_out) add(i, s0, s1, s2, 1.0);
      }
    }
    loglik -= dw * std::log(s0);
    if (grad) {
      for (std::size_t k = 0; k < p; ++k) (*grad)[k] += zsum[k] - dw * s1[k] / s0;
    }
    if (neg_hess) {
      for (std::size_t k = 0; k < p; ++k) {
        for (std::size_t l = 0; l < p; ++l) {
          (*neg_hess)[k * p + l] += dw * (s2[k * p + l] / s0 - s1[k] * s1[l] / (s0 * s0));
        }
      }
    }
  }
  return loglik;
}

double PartialLikelihood::value(std::span<const double> beta) const { return evaluate(beta, nullptr, nullptr); }

std::vector<double> PartialLikelihood::gradient(std::span<const double> beta) const {
  std::vector<double> g;
  evaluate(beta, &g, nullptr);
  return g;
}

StepFunction PartialLikelihood::breslow(std::span<const double> beta) const {
  const std::size_t n = d_.exit.size(), p = d_.p;
  std::vector<double> r(n);
  double shift = 0.0;
  for (std::size_t k = 0; k < p; ++k) shift += mean_[k] * beta[k];
  for (std::size_t i = 0; i < n; ++i) {
    double eta = 0.0;
    for (std::size_t k = 0; k < p; ++k) eta += (d_.z[i * p + k] - mean_[k]) * beta[k];
    r[i] = d_.weight[i] * std::exp(eta);
  }
  std::vector<double> increments;
  increments.reserve(fail_times_.size());
  double a0 = 0.0, b0 = 0.0;
  std::size_t pa = 0, pb = 0;
  for (double u : fail_times_) {
    while (pa < n && d_.exit[by_exit_[pa]] >= u) a0 += r[by_exit_[pa++]];
    while (pb < n && d_.entry[by_entry_[pb]] >= u) b0 += r[by_entry_[pb++]];
    double s0 = a0 - b0, dw = 0.0;
    double excluded = 0.0;
    for (std::size_t q = 0; q < n; ++q) {
      const std::size_t i = by_exit_[q];
      if (d_.exit[i] < u) break;
      if (d_.exit[i] != u) continue;
      if (d_.failure[i]) {
        dw += d_.weight[i];
      } else if (d_.exclude_tied_nonfailures) {
        excluded += r[i];
      }
    }
    s0 -= excluded;
    if (!(s0 > 1e-12 * a0)) {
      s0 = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        const bool tied_out = d_.exclude_tied_nonfailures && d_.exit[i] == u && !d_.failure[i];
        if (d_.entry[i] < u && u <= d_.exit[i] && !tied_out) s0 += r[i];
      }
    }
    increments.push_back(dw / (s0 * std::exp(shift)));
  }
  // fail_times_ is descending
  std::vector<double> knots(fail_times_.rbegin(), fail_times_.rend()), values;
  double cum = 0.0;
  for (auto it = increments.rbegin(); it != increments.rend(); ++it) {
    cum += *it;
    values.push_back(cum);
  }
  return StepFunction(std::move(knots), std::move(values), 0.0);
}

// ------------------------------------------------------------------ fitting

CoxModel fit_cox(const SurvivalData& data, const std::vector<std::string>& names, const FitConfig& config) {
  const std::size_t n = data.exit.size(), p = data.p;
  if (config.max_iter < 1 || !(config.tol > 0.0)) throw Error(ErrorKind::Usage, "invalid FitConfig");
  for (double w : data.weight) {
    if (!(w > 0.0) || !std::isfinite(w)) fail_estimation("case weights must be finite and positive");
  }
  const bool any_failure = std::any_of(data.failure.begin(), data.failure.end(), [](auto f) { return f != 0; });
  if (!any_failure) {
    CoxModel m(std::vector<double>(p, 0.0), StepFunction::constant(0.0), names, config.form);
    return m;
  }

  // drop zero-variance columns
  std::vector<std::size_t> keep;
  std::vector<std::string> dropped;
  for (std::size_t k = 0; k < p; ++k) {
    bool constant = true;
    for (std::size_t i = 1; i < n && constant; ++i) constant = data.z[i * p + k] == data.z[k];
    if (constant) {
      dropped.push_back(names[k]);
    } else {
      keep.push_back(k);
    }
  }
  SurvivalData reduced;
  const SurvivalData* use = &data;
  if (keep.size() != p) {
    reduced = data;
    reduced.p = keep.size();
    reduced.z.assign(n * keep.size(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t k = 0; k < keep.size(); ++k) reduced.z[i * keep.size() + k] = data.z[i * p + keep[k]];
    }
    use = &reduced;
  }
  const std::size_t q = keep.size();
  PartialLikelihood pl(*use);
  std::vector<double> beta(q, 0.0), grad, hess;
  int iter = 0;
  double gnorm = 0.0;
  if (q > 0) {
    double current = pl.evaluate(beta, &grad, &hess);
    bool converged = false;
    for (; iter < config.max_iter; ++iter) {
      gnorm = max_abs(grad);
      if (gnorm <= config.tol) {
        converged = true;
        break;
      }
      Eigen::Map<const Eigen::MatrixXd> h(hess.data(), static_cast<Eigen::Index>(q), static_cast<Eigen::Index>(q));
      Eigen::Map<const Eigen::VectorXd> g(grad.data(), static_cast<Eigen::Index>(q));
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(h);
      const double top = eig.eigenvalues().maxCoeff(), bottom = eig.eigenvalues().minCoeff();
      if (!(bottom > 1e-12 * std::max(top, 1e-300))) fail_estimation("rank-deficient design in Cox fit");
      Eigen::VectorXd step = h.ldlt().solve(g);
      double scale = 1.0;
      std::vector<double> trial(q);
      double value = 0.0;
      for (int halving = 0; halving < 40; ++halving) {
        for (std::size_t k = 0; k < q; ++k) trial[k] = beta[k] + scale * step[static_cast<Eigen::Index>(k)];
        value = pl.value(trial);
        if (std::isfinite(value) && value >= current - 1e-12 * std::abs(current)) break;
        scale *= 0.5;
      }
      for (std::size_t k = 0; k < q; ++k) {
        if (std::abs(trial[k]) > config.beta_cap) {
          fail_estimation("monotone likelihood: coefficient for covariate '" + names[keep[k]] + "' diverges");
        }
      }
      const double moved = scale * step.cwiseAbs().maxCoeff();
      beta = trial;
      current = pl.evaluate(beta, &grad, &hess);
      if (moved < 1e-14 * (1.0 + max_abs(beta))) {
        // no representable progress left
        gnorm = max_abs(grad);
        converged = true;
        ++iter;
        break;
      }
    }
    if (!converged) {
      gnorm = max_abs(grad);
      if (gnorm > config.tol) {
        fail_estimation("Cox fit did not converge after " + std::to_string(config.max_iter) + " iterations");
      }
    }
  }
  std::vector<double> full(p, 0.0);
  for (std::size_t k = 0; k < q; ++k) full[keep[k]] = beta[k];
  CoxModel model(std::move(full), pl.breslow(beta), names, config.form);
  model.iterations = iter;
  model.gradient_norm = gnorm;
  model.dropped = std::move(dropped);
  return model;
}

namespace {

SurvivalData data_from_cohort(const Cohort& cohort, const FitConfig& config) {
  SurvivalData d;
  const std::size_t n = cohort.size();
  d.p = cohort.num_covariates();
  d.entry.assign(cohort.entry().begin(), cohort.entry().end());
  d.exit.assign(cohort.time().begin(), cohort.time().end());
  d.z.reserve(n * d.p);
  for (std::size_t i = 0; i < n; ++i) {
    auto z = cohort.covariates(i);
    d.z.insert(d.z.end(), z.begin(), z.end());
  }
  if (config.case_weights) {
    if (config.case_weights->size() != n) fail_estimation("case weight count does not match cohort size");
    d.weight = *config.case_weights;
  } else {
    d.weight.assign(n, 1.0);
  }
  return d;
}

}  // namespace

CoxModel fit_cox_ltrc(const Cohort& cohort, Target target, const FitConfig& config) {
  SurvivalData d = data_from_cohort(cohort, config);
  d.failure.resize(cohort.size());
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    d.failure[i] = target == Target::Event ? cohort.event()[i] : !cohort.event()[i];
  }
  d.exclude_tied_nonfailures = target == Target::Censoring;
  if (std::none_of(d.failure.begin(), d.failure.end(), [](auto f) { return f != 0; })) {
    fail_estimation(target == Target::Event ? "Cox fit: no events" : "Cox fit: no censored records");
  }
  return fit_cox(d, cohort.covariate_names(), config);
}

CoxModel fit_residual_censoring(const Cohort& cohort, const FitConfig& config) {
  SurvivalData d = data_from_cohort(cohort, config);
  d.failure.resize(cohort.size());
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    d.entry[i] = 0.0;
    d.exit[i] = cohort.time()[i] - cohort.entry()[i];
    d.failure[i] = !cohort.event()[i];
  }
  d.exclude_tied_nonfailures = true;
  return fit_cox(d, cohort.covariate_names(), config);
}

// -------------------------------------------------------- EntryDistribution

EntryDistribution::EntryDistribution(CoxModel reverse_model, double tau) : model_(std::move(reverse_model)), tau_(tau) {}

double EntryDistribution::cdf(double s, std::span<const double> z) const {
  if (s < 0.0) return 0.0;
  return model_.survival_left(tau_ - s, z);
}

double EntryDistribution::cdf_left(double s, std::span<const double> z) const {
  if (s <= 0.0) return 0.0;
  return model_.survival(tau_ - s, z);
}

std::vector<std::pair<double, double>> EntryDistribution::atoms(std::span<const double> z) const {
  const double lp = model_.linear_predictor(z);
  auto knots = model_.baseline_cumhaz().knots();
  std::vector<std::pair<double, double>> out;
  out.reserve(knots.size() + 1);
  // reverse knots ascending -> entry locations descending
  double prev = 1.0;
  for (double v : knots) {
    const double s = model_.survival_lp(v, lp);
    out.emplace_back(tau_ - v, prev - s);
    prev = s;
  }
  std::reverse(out.begin(), out.end());
  if (prev > 0.0) {
    if (!out.empty() && out.front().first <= 0.0) {
      out.front().second += prev;
    } else {
      out.insert(out.begin(), {0.0, prev});
    }
  }
  return out;
}

EntryDistribution fit_entry_distribution(const Cohort& cohort, Scenario scenario, const CoxModel* s_d_given_z,
                                         const FitConfig& config, std::optional<double> tau) {
  const std::size_t n = cohort.size(), p = cohort.num_covariates();
  const double t_max = *std::max_element(cohort.time().begin(), cohort.time().end());
  const double use_tau = tau.value_or(t_max);
  if (use_tau < t_max) fail_estimation("tau must be at least max Ttilde");
  const bool type_a = censoring_after_entry(scenario);
  if (type_a && s_d_given_z == nullptr) fail_estimation("A-scenario entry distribution requires S_D|Z");

  SurvivalData d;
  d.p = p;
  std::vector<std::size_t> overflow;
  for (std::size_t i = 0; i < n; ++i) {
    double w = 1.0;
    if (type_a) {
      if (!cohort.event()[i]) continue;
      const double sd = s_d_given_z->survival(cohort.time()[i] - cohort.entry()[i], cohort.covariates(i));
      if (!(sd > 1e-12)) {
        overflow.push_back(i);
        continue;
      }
      w = 1.0 / sd;
    }
    d.entry.push_back(use_tau - cohort.time()[i]);
    d.exit.push_back(use_tau - cohort.entry()[i]);
    d.failure.push_back(1);
    d.weight.push_back(w);
    auto z = cohort.covariates(i);
    d.z.insert(d.z.end(), z.begin(), z.end());
  }
  if (!overflow.empty()) {
    std::string list;
    for (std::size_t k = 0; k < overflow.size() && k < 10; ++k) list += (k ? "," : "") + std::to_string(overflow[k]);
    fail_estimation("weight overflow: S_D|Z ~ 0 at residual time for records [" + list + "]");
  }
  if (d.exit.empty()) fail_estimation("no records available for the entry-time fit");
  FitConfig cfg = config;
  cfg.case_weights.reset();
  return EntryDistribution(fit_cox(d, cohort.covariate_names(), cfg), use_tau);
}

}  // namespace ltroc
