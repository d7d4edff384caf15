#pragma once

#include "ltroc/cohort.hpp"

// Four-record hand example used across suites: (L, Ttilde, Delta, X).
inline ltroc::Cohort d1_cohort() {
  return ltroc::Cohort({{0, 2, true, {}, 0.9}, {1, 3, true, {}, 0.5}, {0, 4, false, {}, 0.7}, {2, 5, true, {}, 0.1}},
                       {});
}
