#pragma once

// Property checks shared by the unit tests and the acceptance binary.

#include <string>

namespace props {

struct Check {
  bool ok = true;
  std::string detail;  // first failure, or a short summary
};

Check degenerate_reduction();        // all estimators vs empirical, 1e-10
Check brute_force_oracles();         // 20 random cohorts, n <= 8, 1e-12
Check li_identities();               // se_reg_np == se_li_np, sp_ipw2 == sp_li_np
Check covariate_free_cipw();         // CIPW == IPW without covariates
Check likelihood_gradient();         // analytic vs finite differences, 1e-5
Check km_hand_values();              // D1: 2/3, 4/9, 0
Check roc_contract();                // sentinels and monotonicity
Check bootstrap_thread_determinism();

}  // namespace props
