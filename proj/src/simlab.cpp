#include "ltroc/simlab.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <sstream>
#include <tuple>

#include <json.hpp>

#include "ltroc/error.hpp"

namespace ltroc {

namespace {

constexpr std::uint64_t kTruthSeed = 0x7A5C0DE5ULL;

double uniform01(std::mt19937_64& rng) {
  // open interval (0,1) so logs stay finite
  return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

double positive_part(double a) { return a > 0.0 ? a : 0.0; }

double sign(double a) { return static_cast<double>((a > 0.0) - (a < 0.0)); }

double draw_event_time(TModel model, double z1, double z2, std::mt19937_64& rng) {
  const double scale = std::exp(-risk_predictor(model, z1, z2) / 2.0);
  return 0.1 + scale * std::sqrt(-std::log(uniform01(rng)));
}

double entry_theta(LModel model, double z1, double z2) {
  switch (model) {
    case LModel::L1:
      return 1.0;
    case LModel::L2:
      return std::exp(2.0 * z1 / 5.0 + z2 / 10.0);
    case LModel::L3:
      return std::exp(2.0 * sign(std::abs(z1) - 0.33) / 5.0 + z2 / 5.0);
  }
  return 1.0;
}

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt3(double v) {
  if (std::isnan(v)) return "NA";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.3f", v);
  return buf;
}

std::string fmt1(double v) {
  if (std::isnan(v)) return "NA";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

}  // namespace

std::string to_string(TModel m) { return m == TModel::T1 ? "T1" : "T2"; }
std::string to_string(LModel m) { return m == LModel::L1 ? "L1" : m == LModel::L2 ? "L2" : "L3"; }
std::string to_string(CModel m) { return m == CModel::C1 ? "C1" : "C2"; }

std::string to_string(EntryForm f) {
  switch (f) {
    case EntryForm::Cdf: return "cdf";
    case EntryForm::ReversePh: return "reverse_ph";
    case EntryForm::ReversePhInverse: return "reverse_ph_inverse";
  }
  return "cdf";
}

std::string SimScenario::label() const {
  return to_string(t_model) + "/" + to_string(l_model) + "/" + to_string(c_model);
}

double risk_predictor(TModel model, double z1, double z2) {
  if (model == TModel::T1) return -z1 + z2 / 5.0;
  return -2.0 * positive_part(z1 - 0.33) - positive_part(z1 + 0.33) + z2 / 10.0;
}

double event_survival(TModel model, double t, double z1, double z2) {
  if (t <= 0.1) return 1.0;
  const double d = t - 0.1;
  return std::exp(-d * d * std::exp(risk_predictor(model, z1, z2)));
}

Population generate_population(const SimScenario& scenario, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const auto n = static_cast<std::size_t>(scenario.population_n);
  Population p;
  for (auto* v : {&p.entry, &p.event_time, &p.censor_time, &p.z1, &p.z2, &p.score}) v->resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double z1 = -1.0 + 2.0 * uniform01(rng);
    const double z2 = uniform01(rng) < 0.5 ? 1.0 : 0.0;
    const double t = draw_event_time(scenario.t_model, z1, z2, rng);
    const double v = uniform01(rng);
    const double theta = entry_theta(scenario.l_model, z1, z2);
    // v plays the role of P(L > l) under Cdf and of P(L <= l) otherwise
    double l = 0.0;
    switch (scenario.entry_form) {
      case EntryForm::Cdf: l = 5.0 * (1.0 - std::pow(v, 1.0 / theta)); break;
      case EntryForm::ReversePh: l = 5.0 * std::pow(v, 1.0 / theta); break;
      case EntryForm::ReversePhInverse: l = 5.0 * std::pow(v, theta); break;
    }
    const double w = std::pow(-std::log(uniform01(rng)), 0.25);
    const double c = scenario.c_model == CModel::C1 ? l + 3.0 * w : 5.0 * w;
    p.z1[i] = z1;
    p.z2[i] = z2;
    p.event_time[i] = t;
    p.entry[i] = l;
    p.censor_time[i] = c;
    p.score[i] = risk_predictor(scenario.t_model, z1, z2);
  }
  return p;
}

Cohort apply_ltrc(const Population& population) {
  std::vector<CohortRecord> kept;
  for (std::size_t i = 0; i < population.entry.size(); ++i) {
    const double t = population.event_time[i], c = population.censor_time[i], l = population.entry[i];
    if (!(l < std::min(t, c))) continue;
    kept.push_back({l, std::min(t, c), t <= c, {population.z1[i], population.z2[i]}, population.score[i]});
  }
  if (kept.empty()) fail_estimation("empty cohort after selection");
  return Cohort(std::move(kept), {"z1", "z2"});
}

// ---------------------------------------------------------------- truth

TruthEstimate true_auc_monte_carlo(TModel model, double t, long draws, std::uint64_t seed, int batches) {
  if (batches < 2 || draws < batches) throw Error(ErrorKind::Usage, "truth oracle needs at least 2 batches");
  const long per_batch = draws / batches;
  std::vector<double> estimates;
  for (int b = 0; b < batches; ++b) {
    std::mt19937_64 rng(substream_seed(seed, static_cast<std::uint64_t>(b)));
    std::vector<double> cases, controls;
    cases.reserve(static_cast<std::size_t>(per_batch));
    controls.reserve(static_cast<std::size_t>(per_batch));
    for (long k = 0; k < per_batch; ++k) {
      const double z1 = -1.0 + 2.0 * uniform01(rng);
      const double z2 = uniform01(rng) < 0.5 ? 1.0 : 0.0;
      const double time = draw_event_time(model, z1, z2, rng);
      (time <= t ? cases : controls).push_back(risk_predictor(model, z1, z2));
    }
    if (cases.empty() || controls.empty()) fail_estimation("truth oracle: t outside the support");
    std::sort(controls.begin(), controls.end());
    double pairs = 0.0;
    for (double x : cases) {
      pairs += static_cast<double>(std::lower_bound(controls.begin(), controls.end(), x) - controls.begin());
    }
    estimates.push_back(pairs / (static_cast<double>(cases.size()) * static_cast<double>(controls.size())));
  }
  double mean = 0.0;
  for (double e : estimates) mean += e;
  mean /= batches;
  double ss = 0.0;
  for (double e : estimates) ss += (e - mean) * (e - mean);
  const double sd = std::sqrt(ss / (batches - 1));
  return {mean, sd / std::sqrt(static_cast<double>(batches)), per_batch * batches};
}

double true_auc_quadrature(TModel model, double t, int grid) {
  struct Node {
    double x, f, s;
  };
  std::vector<Node> nodes;
  nodes.reserve(2 * static_cast<std::size_t>(grid));
  for (double z2 : {0.0, 1.0}) {
    for (int k = 0; k < grid; ++k) {
      const double z1 = -1.0 + (k + 0.5) * 2.0 / grid;
      const double s = event_survival(model, t, z1, z2);
      nodes.push_back({risk_predictor(model, z1, z2), 1.0 - s, s});
    }
  }
  std::sort(nodes.begin(), nodes.end(), [](const Node& a, const Node& b) { return a.x < b.x; });
  double below = 0.0, num = 0.0, fsum = 0.0, ssum = 0.0;
  for (std::size_t k = 0; k < nodes.size();) {
    std::size_t end = k;
    while (end < nodes.size() && nodes[end].x == nodes[k].x) ++end;
    double group_s = 0.0;
    for (std::size_t q = k; q < end; ++q) {
      num += nodes[q].f * below;
      fsum += nodes[q].f;
      group_s += nodes[q].s;
    }
    below += group_s;
    ssum += group_s;
    k = end;
  }
  return num / (fsum * ssum);
}

TruthEstimate true_auc(TModel model, double t, long draws) {
  static std::mutex mu;
  static std::map<std::tuple<int, double, long>, TruthEstimate> cache;
  const auto key = std::make_tuple(static_cast<int>(model), t, draws);
  {
    std::lock_guard<std::mutex> lock(mu);
    if (auto it = cache.find(key); it != cache.end()) return it->second;
  }
  const TruthEstimate est = true_auc_monte_carlo(model, t, draws, kTruthSeed);
  std::lock_guard<std::mutex> lock(mu);
  cache.emplace(key, est);
  return est;
}

// ---------------------------------------------------------------- cells

std::vector<SimCellResult> run_cell(const SimScenario& scenario) {
  if (scenario.n_reps < 1) throw Error(ErrorKind::Usage, "n_reps must be >= 1");
  if (scenario.estimators.empty()) throw Error(ErrorKind::Usage, "no estimators configured");
  const auto& times = scenario.eval_times;
  const auto& ests = scenario.estimators;
  for (double t : times) {
    if (!(t > 0.0)) throw Error(ErrorKind::Usage, "evaluation times must be positive");
  }
  const std::size_t n_t = times.size(), n_e = ests.size(), slots = n_t * n_e;
  const Scenario weights = scenario.c_model == CModel::C1 ? Scenario::A2 : Scenario::B2;

  std::vector<double> truth(n_t);
  for (std::size_t k = 0; k < n_t; ++k) truth[k] = true_auc(scenario.t_model, times[k], scenario.truth_draws).auc;

  struct Replicate {
    std::vector<double> est, raw, lo, hi, at_risk, events;
    long clamped = 0;
  };
  const auto reps = static_cast<std::size_t>(scenario.n_reps);
  std::vector<Replicate> out(reps);
  const double nan = std::nan("");

  // One joint nuisance fit; if it fails, each estimator is refitted on its own
  // so that one failing model does not take the others down.
  auto estimate_all = [&](const Cohort& cohort, std::vector<double>* raw, long* clamped) {
    std::vector<double> v(slots, nan);
    auto evaluate = [&](const NuisanceSet& nz, std::size_t e) {
      for (std::size_t k = 0; k < n_t; ++k) {
        try {
          double r = 0.0;
          v[k * n_e + e] = estimate_auc(cohort, ests[e], nz, times[k], &r);
          if (raw) (*raw)[k * n_e + e] = r;
        } catch (const Error& err) {
          if (err.kind() == ErrorKind::Usage) throw;
        }
      }
    };
    std::optional<NuisanceSet> joint;
    try {
      joint.emplace(fit_nuisances(cohort, weights, ests));
    } catch (const Error& err) {
      if (err.kind() == ErrorKind::Usage) throw;
    }
    for (std::size_t e = 0; e < n_e; ++e) {
      if (joint) {
        evaluate(*joint, e);
        continue;
      }
      try {
        const EstimatorId one[] = {ests[e]};
        const NuisanceSet nz = fit_nuisances(cohort, weights, one);
        evaluate(nz, e);
        if (clamped) *clamped += nz.kit.stats().clamped;
      } catch (const Error& err) {
        if (err.kind() == ErrorKind::Usage) throw;
      }
    }
    if (joint && clamped) *clamped += joint->kit.stats().clamped;
    return v;
  };

  parallel_for(reps, scenario.threads, [&](std::size_t r) {
    Replicate& rep = out[r];
    rep.est.assign(slots, nan);
    rep.raw.assign(slots, nan);
    rep.lo.assign(slots, nan);
    rep.hi.assign(slots, nan);
    rep.at_risk.assign(n_t, nan);
    rep.events.assign(n_t, nan);
    const Population pop = generate_population(scenario, substream_seed(scenario.seed, r));
    std::optional<Cohort> cohort;
    try {
      cohort = apply_ltrc(pop);
      rep.est = estimate_all(*cohort, &rep.raw, &rep.clamped);
    } catch (const Error& err) {
      if (err.kind() == ErrorKind::Usage) throw;
      return;
    }
    for (std::size_t k = 0; k < n_t; ++k) {
      double at_risk = 0.0, events = 0.0;
      for (std::size_t i = 0; i < cohort->size(); ++i) {
        const double l = cohort->entry()[i], tt = cohort->time()[i];
        if (l < times[k] && times[k] <= tt) at_risk += 1.0;
        if (cohort->event()[i] && tt <= times[k]) events += 1.0;
      }
      rep.at_risk[k] = at_risk;
      rep.events[k] = events;
    }
    if (scenario.boot.n_resamples > 0) {
      BootstrapConfig bc = scenario.boot;
      bc.seed = substream_seed(scenario.boot.seed ^ scenario.seed, r);
      bc.threads = 1;
      try {
        const auto ci = bootstrap_ci_many(
            *cohort,
            [&](const Cohort& c) {
              try {
                return estimate_all(c, nullptr, nullptr);
              } catch (const Error& err) {
                if (err.kind() == ErrorKind::Usage) throw;
                return std::vector<double>(slots, nan);
              }
            },
            bc);
        for (std::size_t s = 0; s < slots; ++s) {
          rep.lo[s] = ci[s].lo;
          rep.hi[s] = ci[s].hi;
        }
      } catch (const Error& err) {
        if (err.kind() == ErrorKind::Usage) throw;
      }
    }
  });

  std::vector<SimCellResult> results;
  for (std::size_t k = 0; k < n_t; ++k) {
    double at_risk = 0.0, events = 0.0;
    int generated = 0;
    for (const auto& rep : out) {
      if (std::isnan(rep.at_risk[k])) continue;
      at_risk += rep.at_risk[k];
      events += rep.events[k];
      ++generated;
    }
    for (std::size_t e = 0; e < n_e; ++e) {
      const std::size_t s = k * n_e + e;
      SimCellResult cell;
      cell.scenario = scenario.label();
      cell.population_n = scenario.population_n;
      cell.estimator = ests[e];
      cell.t = times[k];
      cell.truth = truth[k];
      cell.mean_at_risk = generated ? at_risk / generated : nan;
      cell.mean_cum_events = generated ? events / generated : nan;
      double sum = 0.0, sum2 = 0.0, excursion = 0.0;
      int covered = 0;
      for (const auto& rep : out) {
        cell.clamped_weights += rep.clamped;
        const double v = rep.est[s];
        if (std::isnan(v)) {
          ++cell.n_dropped;
          continue;
        }
        ++cell.n_reps_used;
        const double d = v - truth[k];
        sum += d;
        sum2 += d * d;
        excursion += std::abs(rep.raw[s] - v);
        if (!std::isnan(rep.lo[s])) {
          ++cell.n_ci;
          if (rep.lo[s] <= truth[k] && truth[k] <= rep.hi[s]) ++covered;
        }
      }
      if (static_cast<double>(cell.n_dropped) > 0.1 * static_cast<double>(reps)) {
        fail_estimation("cell " + cell.scenario + " t=" + fmt17(times[k]) + " " + to_string(ests[e]) + ": " +
                        std::to_string(cell.n_dropped) + " of " + std::to_string(reps) + " replicates failed");
      }
      const double m = cell.n_reps_used;
      cell.mean_bias = sum / m;
      cell.rmse = std::sqrt(sum2 / m);
      const double var = m > 1 ? (sum2 - m * cell.mean_bias * cell.mean_bias) / (m - 1) : 0.0;
      cell.mc_se = std::sqrt(std::max(var, 0.0) / m);
      cell.mean_auc_excursion = excursion / m;
      cell.coverage = cell.n_ci > 0 ? 100.0 * covered / cell.n_ci : nan;
      results.push_back(cell);
    }
  }
  return results;
}

// ---------------------------------------------------------------- tables

void emit_table(const std::vector<SimCellResult>& results, TableFormat format, std::ostream& out) {
  if (results.empty()) throw Error(ErrorKind::Usage, "no results to emit");
  switch (format) {
    case TableFormat::Csv:
      out << "scenario,t,N,estimator,bias,rmse,coverage,at_risk,cum_events,truth,mc_se,n_reps_used,n_dropped\n";
      for (const auto& r : results) {
        out << r.scenario << ',' << fmt17(r.t) << ',' << r.population_n << ',' << to_string(r.estimator) << ','
            << fmt17(r.mean_bias) << ',' << fmt17(r.rmse) << ','
            << (std::isnan(r.coverage) ? std::string("NA") : fmt17(r.coverage)) << ',' << fmt17(r.mean_at_risk)
            << ',' << fmt17(r.mean_cum_events) << ',' << fmt17(r.truth) << ',' << fmt17(r.mc_se) << ','
            << r.n_reps_used << ',' << r.n_dropped << '\n';
      }
      break;
    case TableFormat::Markdown:
      out << "| scenario | t | N | estimator | bias | sqrt(MSE) | coverage | # at risk | # cum. events |\n"
          << "|---|---|---|---|---|---|---|---|---|\n";
      for (const auto& r : results) {
        out << "| " << r.scenario << " | " << fmt1(r.t) << " | " << r.population_n << " | "
            << to_string(r.estimator) << " | " << fmt3(r.mean_bias) << " | " << fmt3(r.rmse) << " | "
            << fmt1(r.coverage) << " | " << fmt1(r.mean_at_risk) << " | " << fmt1(r.mean_cum_events) << " |\n";
      }
      break;
    case TableFormat::Json: {
      nlohmann::json rows = nlohmann::json::array();
      for (const auto& r : results) {
        nlohmann::json row = {{"scenario", r.scenario},
                              {"t", r.t},
                              {"N", r.population_n},
                              {"estimator", to_string(r.estimator)},
                              {"bias", r.mean_bias},
                              {"rmse", r.rmse},
                              {"at_risk", r.mean_at_risk},
                              {"cum_events", r.mean_cum_events},
                              {"truth", r.truth},
                              {"mc_se", r.mc_se},
                              {"n_reps_used", r.n_reps_used},
                              {"n_dropped", r.n_dropped},
                              {"clamped_weights", r.clamped_weights}};
        row["coverage"] = std::isnan(r.coverage) ? nlohmann::json(nullptr) : nlohmann::json(r.coverage);
        rows.push_back(row);
      }
      out << rows.dump(2) << '\n';
      break;
    }
  }
}

// ---------------------------------------------------------------- config

namespace {

std::string trim(std::string s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string lower(std::string s) {
  for (auto& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
  return s;
}

double to_double(const std::string& v, const std::string& key) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw Error(ErrorKind::Ingest, "config: bad number for '" + key + "': " + v);
  }
}

long long to_int(const std::string& v, const std::string& key) {
  try {
    std::size_t used = 0;
    const long long d = std::stoll(v, &used);
    if (used != v.size()) throw std::invalid_argument(v);
    return d;
  } catch (const std::exception&) {
    throw Error(ErrorKind::Ingest, "config: bad integer for '" + key + "': " + v);
  }
}

void apply_key(SimScenario& s, const std::string& key, const std::string& value) {
  const std::string v = lower(value);
  if (key == "t_model") {
    if (v != "t1" && v != "t2") throw Error(ErrorKind::Ingest, "config: t_model must be T1 or T2");
    s.t_model = v == "t1" ? TModel::T1 : TModel::T2;
  } else if (key == "l_model") {
    if (v != "l1" && v != "l2" && v != "l3") throw Error(ErrorKind::Ingest, "config: l_model must be L1, L2 or L3");
    s.l_model = v == "l1" ? LModel::L1 : v == "l2" ? LModel::L2 : LModel::L3;
  } else if (key == "c_model") {
    if (v != "c1" && v != "c2") throw Error(ErrorKind::Ingest, "config: c_model must be C1 or C2");
    s.c_model = v == "c1" ? CModel::C1 : CModel::C2;
  } else if (key == "entry_form") {
    if (v == "cdf") {
      s.entry_form = EntryForm::Cdf;
    } else if (v == "reverse_ph") {
      s.entry_form = EntryForm::ReversePh;
    } else if (v == "reverse_ph_inverse") {
      s.entry_form = EntryForm::ReversePhInverse;
    } else {
      throw Error(ErrorKind::Ingest, "config: entry_form must be cdf, reverse_ph or reverse_ph_inverse");
    }
  } else if (key == "n") {
    s.population_n = static_cast<int>(to_int(v, key));
  } else if (key == "reps") {
    s.n_reps = static_cast<int>(to_int(v, key));
  } else if (key == "times") {
    s.eval_times.clear();
    for (const auto& item : split_list(v)) s.eval_times.push_back(to_double(item, key));
  } else if (key == "seed") {
    s.seed = static_cast<std::uint64_t>(to_int(v, key));
  } else if (key == "boot") {
    s.boot.n_resamples = static_cast<int>(to_int(v, key));
  } else if (key == "boot_seed") {
    s.boot.seed = static_cast<std::uint64_t>(to_int(v, key));
  } else if (key == "ci_level") {
    s.boot.ci_level = to_double(v, key);
  } else if (key == "threads") {
    s.threads = static_cast<int>(to_int(v, key));
  } else if (key == "truth_draws") {
    s.truth_draws = static_cast<long>(to_int(v, key));
  } else if (key == "estimators") {
    try {
      s.estimators = parse_estimator_list(v);
    } catch (const Error& e) {
      throw Error(ErrorKind::Ingest, std::string("config: ") + e.what());
    }
  } else {
    throw Error(ErrorKind::Ingest, "config: unknown key '" + key + "'");
  }
}

void check(const SimScenario& s) {
  if (s.population_n < 1) throw Error(ErrorKind::Ingest, "config: n must be >= 1");
  if (s.n_reps < 1) throw Error(ErrorKind::Ingest, "config: reps must be >= 1");
  if (s.eval_times.empty()) throw Error(ErrorKind::Ingest, "config: times must be non-empty");
  for (double t : s.eval_times) {
    if (!(t > 0.0)) throw Error(ErrorKind::Ingest, "config: times must be positive");
  }
  if (s.boot.n_resamples < 0) throw Error(ErrorKind::Ingest, "config: boot must be >= 0");
  if (s.truth_draws < 1000) throw Error(ErrorKind::Ingest, "config: truth_draws must be >= 1000");
}

}  // namespace

std::vector<SimScenario> parse_sim_config(std::istream& in) {
  SimScenario defaults;
  defaults.estimators = all_estimators();
  std::vector<SimScenario> cells;
  bool in_cell = false;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line == "[cell]") {
      cells.push_back(defaults);
      in_cell = true;
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw Error(ErrorKind::Ingest, "config line " + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = lower(trim(line.substr(0, eq)));
    const std::string value = trim(line.substr(eq + 1));
    apply_key(in_cell ? cells.back() : defaults, key, value);
  }
  if (cells.empty()) cells.push_back(defaults);
  for (const auto& c : cells) check(c);
  return cells;
}

std::vector<SimScenario> parse_sim_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Ingest, "cannot open config " + path);
  return parse_sim_config(in);
}

}  // namespace ltroc
