#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <map>
#include <optional>
#include <sstream>

#include "ltroc/bootstrap.hpp"
#include "ltroc/cohort.hpp"
#include "ltroc/error.hpp"
#include "ltroc/kernels/pair_sum.hpp"
#include "ltroc/risk_score.hpp"
#include "ltroc/rocauc.hpp"
#include "ltroc/serialize.hpp"
#include "ltroc/simlab.hpp"

namespace fs = std::filesystem;
using namespace ltroc;

namespace {

constexpr const char* kVersion = "0.1.0";

struct InputOptions {
  std::string input;
  CsvSchema schema;
  std::string covariates;
  std::string scenario = "a1";
  std::string survival_form = "exponential";
  double trim_floor = 1e-6;
  std::optional<double> tau;
};

void add_input_options(CLI::App* cmd, InputOptions& o) {
  cmd->add_option("-i,--input", o.input, "cohort CSV")->required();
  cmd->add_option("--col-entry", o.schema.entry, "entry-time column")->capture_default_str();
  cmd->add_option("--col-time", o.schema.time, "observed-time column")->capture_default_str();
  cmd->add_option("--col-event", o.schema.event, "event indicator column (1 = event)")->capture_default_str();
  cmd->add_option("--col-score", o.schema.score, "risk score column")->capture_default_str();
  cmd->add_option("--col-covariates", o.covariates, "comma-separated covariate columns");
  cmd->add_option("--scenario", o.scenario, "a1, a2, b1 or b2")->capture_default_str();
  cmd->add_option("--survival-form", o.survival_form, "Cox survival curve: exponential or product-limit")
      ->capture_default_str();
  cmd->add_option("--trim-floor", o.trim_floor, "lower bound applied to weight probabilities")->capture_default_str();
  cmd->add_option("--tau", o.tau, "reverse-time origin for the entry-time model (default max time)");
}

NuisanceOptions nuisance_options(const InputOptions& o) {
  NuisanceOptions n;
  n.trim_floor = o.trim_floor;
  n.tau = o.tau;
  if (o.survival_form == "exponential") {
    n.cox.form = SurvivalForm::Exponential;
  } else if (o.survival_form == "product-limit") {
    n.cox.form = SurvivalForm::ProductLimit;
  } else {
    throw Error(ErrorKind::Usage, "unknown survival form '" + o.survival_form + "'");
  }
  return n;
}

std::vector<double> parse_times(const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split_list(text)) {
    try {
      std::size_t used = 0;
      const double t = std::stod(item, &used);
      if (used != item.size() || !(t > 0.0)) throw std::invalid_argument(item);
      out.push_back(t);
    } catch (const std::exception&) {
      throw Error(ErrorKind::Usage, "bad evaluation time '" + item + "'");
    }
  }
  if (out.empty()) throw Error(ErrorKind::Usage, "--times must list at least one time");
  return out;
}

std::string time_tag(double t) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", t);
  return buf;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot write " + path.string());
  return out;
}

IngestResult load(const InputOptions& o) {
  CsvSchema schema = o.schema;
  schema.covariates = split_list(o.covariates);
  return ingest_csv(o.input, schema);
}

// Fits nuisances for all estimators at once; an estimator whose own fit fails
// gets its error message instead of a set.
struct FittedSets {
  std::optional<NuisanceSet> joint;
  std::map<EstimatorId, NuisanceSet> single;
  std::map<EstimatorId, std::string> errors;

  const NuisanceSet* get(EstimatorId id) const {
    if (joint) return &*joint;
    auto it = single.find(id);
    return it == single.end() ? nullptr : &it->second;
  }
};

FittedSets fit_all(const Cohort& cohort, Scenario scenario, const std::vector<EstimatorId>& ests,
                   const NuisanceOptions& opts) {
  FittedSets f;
  try {
    f.joint.emplace(fit_nuisances(cohort, scenario, ests, opts));
    return f;
  } catch (const Error& e) {
    if (e.kind() == ErrorKind::Usage) throw;
  }
  for (EstimatorId id : ests) {
    try {
      const EstimatorId one[] = {id};
      f.single.emplace(id, fit_nuisances(cohort, scenario, one, opts));
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::Usage) throw;
      f.errors[id] = e.what();
    }
  }
  return f;
}

int cmd_analyze(const InputOptions& in, const std::string& estimators, const std::string& times_text, int boot,
                std::uint64_t seed, double ci_level, int threads, const std::string& out_dir) {
  const auto ests = parse_estimator_list(estimators);
  const auto times = parse_times(times_text);
  const Scenario scenario = parse_scenario(in.scenario);
  const NuisanceOptions opts = nuisance_options(in);
  const IngestResult data = load(in);
  const Cohort& cohort = data.cohort;

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create " + out_dir + ": " + ec.message());

  const FittedSets fitted = fit_all(cohort, scenario, ests, opts);
  std::vector<AucSummaryRow> rows;
  nlohmann::json diag;
  diag["n_records"] = cohort.size();
  diag["n_events"] = cohort.num_events();
  diag["scenario"] = to_string(scenario);
  nlohmann::json rejected = nlohmann::json::array();
  for (const auto& r : data.rejected) rejected.push_back({{"line", r.line}, {"reason", r.message}});
  diag["rejected_rows"] = rejected;
  diag["simd"] = kernels::active_simd_level() == kernels::SimdLevel::Avx2 ? "avx2" : "scalar";
  nlohmann::json per_est = nlohmann::json::object();
  bool any_error = false;

  for (EstimatorId id : ests) {
    nlohmann::json entry;
    const NuisanceSet* nz = fitted.get(id);
    std::vector<double> ess;
    for (double t : times) {
      AucSummaryRow row;
      row.estimator = id;
      row.t = t;
      if (nz == nullptr) {
        row.error = fitted.errors.at(id);
      } else {
        try {
          RocResult roc = roc_curve(cohort, id, *nz, t);
          row.auc = roc.auc;
          row.auc_raw = roc.auc_raw;
          row.ess = roc.ess;
          ess.push_back(roc.ess);
          const std::string stem = "roc_" + to_string(id) + "_" + time_tag(t);
          auto csv = open_out(fs::path(out_dir) / (stem + ".csv"));
          write_roc_csv(roc, csv);
          auto js = open_out(fs::path(out_dir) / (stem + ".json"));
          js << to_json(roc).dump(2) << '\n';
        } catch (const Error& e) {
          if (e.kind() != ErrorKind::Estimation) throw;
          row.error = e.what();
        }
      }
      any_error |= !row.error.empty();
      rows.push_back(row);
    }
    if (boot > 0 && nz != nullptr) {
      BootstrapConfig bc{boot, seed, ci_level, threads};
      const EstimatorId one[] = {id};
      try {
        const auto ci = bootstrap_ci_many(
            cohort,
            [&](const Cohort& c) {
              std::vector<double> v(times.size(), std::nan(""));
              const NuisanceSet n = fit_nuisances(c, scenario, one, opts);
              for (std::size_t k = 0; k < times.size(); ++k) {
                try {
                  v[k] = estimate_auc(c, id, n, times[k]);
                } catch (const Error& e) {
                  if (e.kind() == ErrorKind::Usage) throw;
                }
              }
              return v;
            },
            bc);
        for (std::size_t k = 0; k < times.size(); ++k) {
          AucSummaryRow& row = rows[rows.size() - times.size() + k];
          if (!row.error.empty()) continue;
          row.lo = ci[k].lo;
          row.hi = ci[k].hi;
          row.n_failed = ci[k].n_failed;
        }
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::Estimation) throw;
        entry["bootstrap_error"] = e.what();
        any_error = true;
      }
    }
    if (nz != nullptr) {
      entry["weights"] = to_json(nz->kit.stats());
      entry["warnings"] = nz->warnings;
    } else {
      entry["fit_error"] = fitted.errors.at(id);
    }
    entry["ess"] = ess;
    per_est[to_string(id)] = entry;
  }
  diag["estimators"] = per_est;

  auto summary = open_out(fs::path(out_dir) / "auc_summary.csv");
  write_auc_summary(rows, summary);
  auto dj = open_out(fs::path(out_dir) / "diagnostics.json");
  dj << diag.dump(2) << '\n';
  for (const auto& r : rows) {
    if (!r.error.empty()) std::cerr << "error: kind=estimation estimator=" << to_string(r.estimator) << " t=" << time_tag(r.t) << " message=\"" << r.error << "\"\n";
  }
  return any_error ? static_cast<int>(ErrorKind::Estimation) : 0;
}

int cmd_roc_curve(const InputOptions& in, const std::string& estimator, double t, const std::string& out_path) {
  const EstimatorId id = parse_estimator(estimator);
  const Scenario scenario = parse_scenario(in.scenario);
  const NuisanceOptions opts = nuisance_options(in);
  const IngestResult data = load(in);
  const EstimatorId one[] = {id};
  const NuisanceSet nz = fit_nuisances(data.cohort, scenario, one, opts);
  const RocResult roc = roc_curve(data.cohort, id, nz, t);
  if (out_path.empty() || out_path == "-") {
    write_roc_csv(roc, std::cout);
  } else {
    auto out = open_out(out_path);
    write_roc_csv(roc, out);
  }
  std::cerr << "auc=" << format_number(roc.auc) << '\n';
  return 0;
}

int cmd_simulate(const std::string& config, const std::string& out_dir, int threads) {
  auto cells = parse_sim_config_file(config);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorKind::Io, "cannot create " + out_dir + ": " + ec.message());
  std::vector<SimCellResult> all;
  nlohmann::json provenance;
  provenance["version"] = kVersion;
  provenance["config"] = config;
  nlohmann::json cell_info = nlohmann::json::array();
  for (auto& cell : cells) {
    if (threads != 0) cell.threads = threads;
    auto res = run_cell(cell);
    nlohmann::json truth = nlohmann::json::object();
    for (double t : cell.eval_times) {
      const TruthEstimate est = true_auc(cell.t_model, t, cell.truth_draws);
      truth[time_tag(t)] = {{"auc", est.auc}, {"se", est.se}, {"draws", est.draws}};
    }
    cell_info.push_back({{"scenario", cell.label()},
                         {"seed", cell.seed},
                         {"boot", cell.boot.n_resamples},
                         {"boot_seed", cell.boot.seed},
                         {"reps", cell.n_reps},
                         {"N", cell.population_n},
                         {"entry_form", to_string(cell.entry_form)},
                         {"truth", truth}});
    all.insert(all.end(), res.begin(), res.end());
  }
  provenance["cells"] = cell_info;
  {
    auto csv = open_out(fs::path(out_dir) / "sim_table.csv");
    emit_table(all, TableFormat::Csv, csv);
    auto md = open_out(fs::path(out_dir) / "sim_table.md");
    emit_table(all, TableFormat::Markdown, md);
  }
  std::ostringstream rows;
  emit_table(all, TableFormat::Json, rows);
  nlohmann::json doc = {{"provenance", provenance}, {"rows", nlohmann::json::parse(rows.str())}};
  auto js = open_out(fs::path(out_dir) / "sim_table.json");
  js << doc.dump(2) << '\n';
  emit_table(all, TableFormat::Markdown, std::cout);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Time-dependent ROC analysis for left-truncated right-censored data"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  InputOptions an_in;
  std::string estimators, times, out_dir = "ltroc_out";
  int boot = 0, threads = 0;
  std::uint64_t seed = 1;
  double ci_level = 0.95;
  auto* analyze = app.add_subcommand("analyze", "estimate ROC curves and AUCs for a cohort");
  add_input_options(analyze, an_in);
  analyze->add_option("--estimators", estimators, "comma-separated estimator names")->required();
  analyze->add_option("--times", times, "comma-separated evaluation times")->required();
  analyze->add_option("--boot", boot, "bootstrap resamples (0 = none)")->capture_default_str();
  analyze->add_option("--seed", seed, "bootstrap seed")->capture_default_str();
  analyze->add_option("--ci-level", ci_level, "confidence level")->capture_default_str();
  analyze->add_option("--threads", threads, "worker threads (0 = all cores)")->capture_default_str();
  analyze->add_option("-o,--out", out_dir, "output directory")->capture_default_str();

  InputOptions roc_in;
  std::string roc_est, roc_out;
  double roc_t = 0.0;
  auto* roc = app.add_subcommand("roc-curve", "print one ROC curve as CSV");
  add_input_options(roc, roc_in);
  roc->add_option("--estimator", roc_est, "estimator name")->required();
  roc->add_option("-t,--time", roc_t, "evaluation time")->required();
  roc->add_option("-o,--out", roc_out, "output file (default stdout)");

  std::string sim_config, sim_out = "sim_out";
  int sim_threads = 0;
  auto* simulate = app.add_subcommand("simulate", "run simulation cells from a key = value config");
  simulate->add_option("config", sim_config, "config file")->required();
  simulate->add_option("-o,--out", sim_out, "output directory")->capture_default_str();
  simulate->add_option("--threads", sim_threads, "worker threads (0 = as configured)")->capture_default_str();

  bool female = false;
  double agedx = 0.0, anth = 0.0, chrt = 0.0;
  auto* risk = app.add_subcommand("risk-score", "heart-failure risk score for one person");
  risk->add_flag("--female", female, "female sex");
  risk->add_option("--agedx", agedx, "age at diagnosis, years")->required();
  risk->add_option("--anth", anth, "anthracycline dose, mg/m^2")->required();
  risk->add_option("--chrt", chrt, "chest radiation dose, cGy")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : static_cast<int>(ErrorKind::Usage);
  }

  try {
    if (*analyze) return cmd_analyze(an_in, estimators, times, boot, seed, ci_level, threads, out_dir);
    if (*roc) return cmd_roc_curve(roc_in, roc_est, roc_t, roc_out);
    if (*simulate) return cmd_simulate(sim_config, sim_out, sim_threads);
    if (*risk) {
      std::printf("%.3f\n", chow_risk_score(female, agedx, anth, chrt));
      return 0;
    }
  } catch (const Error& e) {
    static const char* names[] = {"", "usage", "ingest", "estimation", "io"};
    const int code = static_cast<int>(e.kind());
    std::cerr << "error: kind=" << names[code] << " message=\"" << e.what() << "\"\n";
    return code;
  } catch (const std::exception& e) {
    std::cerr << "error: kind=io message=\"" << e.what() << "\"\n";
    return static_cast<int>(ErrorKind::Io);
  }
  return 0;
}
