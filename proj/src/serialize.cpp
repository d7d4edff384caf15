#include "ltroc/serialize.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace ltroc {

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

nlohmann::json number(double v) {
  if (std::isfinite(v)) return v;
  return format_number(v);
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  return out + "\"";
}

}  // namespace

nlohmann::json to_json(const StepFunction& f) {
  return {{"knots", std::vector<double>(f.knots().begin(), f.knots().end())},
          {"values", std::vector<double>(f.values().begin(), f.values().end())},
          {"left_value", f.left_value()}};
}

nlohmann::json to_json(const CoxModel& m) {
  return {{"covariates", m.covariate_names()},
          {"coefficients", m.coefficients()},
          {"dropped", m.dropped},
          {"iterations", m.iterations},
          {"gradient_norm", m.gradient_norm},
          {"survival_form", m.form() == SurvivalForm::Exponential ? "exponential" : "product_limit"},
          {"baseline_cumhaz", to_json(m.baseline_cumhaz())}};
}

nlohmann::json to_json(const RocResult& r) {
  nlohmann::json thresholds = nlohmann::json::array();
  for (double c : r.thresholds) thresholds.push_back(number(c));
  nlohmann::json out = {{"estimator", to_string(r.estimator)},
                        {"t", r.t},
                        {"thresholds", thresholds},
                        {"se", r.se},
                        {"sp", r.sp},
                        {"auc", r.auc},
                        {"auc_raw", r.auc_raw},
                        {"ess", r.ess}};
  out["auc_ci"] = r.auc_ci ? nlohmann::json::array({r.auc_ci->first, r.auc_ci->second}) : nlohmann::json(nullptr);
  return out;
}

nlohmann::json to_json(const WeightStats& s) { return {{"clamped", s.clamped}, {"min_raw", s.min_raw}}; }

void write_roc_csv(const RocResult& r, std::ostream& out) {
  out << "threshold,se,sp,fpr\n";
  for (std::size_t k = 0; k < r.thresholds.size(); ++k) {
    out << format_number(r.thresholds[k]) << ',' << format_number(r.se[k]) << ',' << format_number(r.sp[k]) << ','
        << format_number(1.0 - r.sp[k]) << '\n';
  }
}

void write_auc_summary(const std::vector<AucSummaryRow>& rows, std::ostream& out) {
  out << "estimator,t,auc,auc_raw,ci_lo,ci_hi,boot_failed,ess,error\n";
  for (const auto& r : rows) {
    out << to_string(r.estimator) << ',' << format_number(r.t) << ',';
    if (r.error.empty()) {
      out << format_number(r.auc) << ',' << format_number(r.auc_raw) << ',';
    } else {
      out << "NA,NA,";
    }
    out << (r.lo ? format_number(*r.lo) : "NA") << ',' << (r.hi ? format_number(*r.hi) : "NA") << ',' << r.n_failed
        << ',' << (r.error.empty() ? format_number(r.ess) : "NA") << ',' << csv_field(r.error) << '\n';
  }
}

}  // namespace ltroc
