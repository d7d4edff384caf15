#include "ltroc/risk_score.hpp"

#include <cmath>

#include "ltroc/error.hpp"

namespace ltroc {

double chow_risk_score(bool female, double agedx, double anth, double chrt) {
  for (double v : {agedx, anth, chrt}) {
    if (!std::isfinite(v) || v < 0.0) throw Error(ErrorKind::Usage, "risk score inputs must be finite and >= 0");
  }
  double score = female ? 0.524 : 0.0;

  if (agedx < 5.0) {
    score += 0.774;
  } else if (agedx < 10.0) {
    score += 0.456;
  } else if (agedx < 15.0) {
    score += 0.212;
  }

  if (anth > 0.0 && anth < 100.0) {
    score += 0.626;
  } else if (anth >= 100.0 && anth < 250.0) {
    score += 1.191;
  } else if (anth >= 250.0) {
    score += 2.151;
  }

  if (chrt > 100.0 && chrt < 500.0) {
    score += 0.030;
  } else if (chrt >= 500.0 && chrt < 1500.0) {
    score += 0.721;
  } else if (chrt >= 1500.0 && chrt < 3500.0) {
    score += 0.832;
  } else if (chrt >= 3500.0) {
    score += 1.865;
  }
  return score;
}

}  // namespace ltroc
