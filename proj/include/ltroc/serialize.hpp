#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "ltroc/condsurv.hpp"
#include "ltroc/rocauc.hpp"
#include "ltroc/step_function.hpp"
#include "ltroc/weights.hpp"

namespace ltroc {

/// %.17g; "inf", "-inf" and "nan" for non-finite values.
std::string format_number(double v);

nlohmann::json to_json(const StepFunction& f);
nlohmann::json to_json(const CoxModel& m);
/// Thresholds of +-infinity are written as the strings "inf" / "-inf".
nlohmann::json to_json(const RocResult& r);
nlohmann::json to_json(const WeightStats& s);

/// Curve points, one row per threshold: threshold,se,sp,fpr.
void write_roc_csv(const RocResult& r, std::ostream& out);

struct AucSummaryRow {
  EstimatorId estimator = EstimatorId::RegNp;
  double t = 0.0;
  double auc = 0.0, auc_raw = 0.0;
  std::optional<double> lo, hi;
  int n_failed = 0;
  double ess = 0.0;
  std::string error;  // non-empty when the estimator failed at t
};

void write_auc_summary(const std::vector<AucSummaryRow>& rows, std::ostream& out);

}  // namespace ltroc
