#pragma once

namespace ltroc {

/// Heart-failure risk score for childhood cancer survivors: sex, age at
/// diagnosis (years), anthracycline dose (mg/m^2), chest radiation (cGy).
/// Bins are half-open on the right; chrt = 100 scores 0. Throws
/// Error(Usage) on negative or non-finite inputs.
double chow_risk_score(bool female, double agedx, double anth, double chrt);

}  // namespace ltroc
