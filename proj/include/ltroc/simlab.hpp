#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "ltroc/bootstrap.hpp"
#include "ltroc/cohort.hpp"
#include "ltroc/rocauc.hpp"

namespace ltroc {

enum class TModel { T1, T2 };
enum class LModel { L1, L2, L3 };
enum class CModel { C1, C2 };

/// Readings of the entry-time curve 1 - ((5-u)/5)^theta for L2/L3.
/// Cdf: it is P(L <= u), so P(L > u) = ((5-u)/5)^theta.
/// ReversePh: proportional hazards for the reverse time 5 - L with a
/// Unif(0,5) baseline and hazard ratio theta, i.e. P(L <= u) = (u/5)^theta.
/// ReversePhInverse: the same model with hazard ratio 1/theta, i.e.
/// P(L <= u) = (u/5)^(1/theta). Default; larger theta means earlier
/// entry. Any of the three makes entry depend on Z, which IPW1 ignores.
enum class EntryForm { Cdf, ReversePh, ReversePhInverse };

std::string to_string(EntryForm f);

struct SimScenario {
  TModel t_model = TModel::T1;
  LModel l_model = LModel::L1;
  CModel c_model = CModel::C1;
  EntryForm entry_form = EntryForm::ReversePhInverse;
  int population_n = 1500;
  std::vector<double> eval_times = {0.9, 1.6, 2.6};
  int n_reps = 200;
  BootstrapConfig boot{0, 1, 0.95, 1};  // n_resamples = 0 disables intervals
  std::uint64_t seed = 1;
  int threads = 1;
  std::vector<EstimatorId> estimators;
  long truth_draws = 10'000'000;

  std::string label() const;
};

std::string to_string(TModel m);
std::string to_string(LModel m);
std::string to_string(CModel m);

/// Full population before selection.
struct Population {
  std::vector<double> entry, event_time, censor_time, z1, z2, score;
};

/// Linear predictor of the event-time model; the evaluated score.
double risk_predictor(TModel model, double z1, double z2);
/// P(T > t | Z) under the event-time model.
double event_survival(TModel model, double t, double z1, double z2);

Population generate_population(const SimScenario& scenario, std::uint64_t seed);
/// Keeps L < min(T, C); covariates are (z1, z2). Throws Error(Estimation) if
/// nothing survives selection.
Cohort apply_ltrc(const Population& population);

struct TruthEstimate {
  double auc = 0.0;
  double se = 0.0;  // batch-means standard error
  long draws = 0;
};

/// Monte-Carlo AUC(t) = P(X_i > X_j | T_i <= t < T_j) from independent (X, T)
/// draws, averaged over `batches` equal batches.
TruthEstimate true_auc_monte_carlo(TModel model, double t, long draws, std::uint64_t seed, int batches = 20);
/// Same quantity by midpoint quadrature over Z1 (grid points per Z2 level).
double true_auc_quadrature(TModel model, double t, int grid = 20000);
/// Cached Monte-Carlo truth with the lab's fixed seed.
TruthEstimate true_auc(TModel model, double t, long draws);

struct SimCellResult {
  std::string scenario;
  int population_n = 0;
  EstimatorId estimator = EstimatorId::RegNp;
  double t = 0.0;
  double truth = 0.0;
  double mean_bias = 0.0;
  double rmse = 0.0;
  double mc_se = 0.0;     // standard error of mean_bias over replicates
  double coverage = 0.0;  // percent; NaN without bootstrap
  double mean_at_risk = 0.0;
  double mean_cum_events = 0.0;
  double mean_auc_excursion = 0.0;  // mean |pre-clamp - clamped|
  int n_reps_used = 0;
  int n_dropped = 0;
  int n_ci = 0;
  long clamped_weights = 0;
};

/// Runs every replicate of the cell. A-type weights for C1, B-type for C2.
/// Throws Error(Estimation) when more than 10% of replicates fail for an
/// (estimator, t) pair.
std::vector<SimCellResult> run_cell(const SimScenario& scenario);

enum class TableFormat { Csv, Json, Markdown };
void emit_table(const std::vector<SimCellResult>& results, TableFormat format, std::ostream& out);

/// key = value lines; "[cell]" starts a new cell that inherits the keys set
/// before the first section. Throws Error(Ingest) on malformed input.
std::vector<SimScenario> parse_sim_config(std::istream& in);
std::vector<SimScenario> parse_sim_config_file(const std::string& path);

}  // namespace ltroc
