#include "ltroc/cohort.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <unordered_map>

#include "ltroc/error.hpp"

namespace ltroc {

namespace {

std::string full_precision(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(std::string_view s) {
  std::size_t b = 0, e = s.size();
  while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  return std::string(s.substr(b, e - b));
}

// RFC-4180-ish: double quotes delimit fields, "" escapes a quote.
std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(trim(cur));
  return out;
}

std::optional<double> parse_number(const std::string& cell) {
  double v = 0.0;
  const char* first = cell.data();
  const char* last = first + cell.size();
  if (!cell.empty() && *first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return v;
}

void check_record(const CohortRecord& r, std::size_t p, std::size_t index) {
  auto bad = [&](const std::string& why) {
    throw Error(ErrorKind::Ingest, "record " + std::to_string(index) + ": " + why);
  };
  if (!std::isfinite(r.entry) || !std::isfinite(r.time) || !std::isfinite(r.score)) bad("non-finite value");
  if (r.entry < 0.0) bad("negative entry time");
  if (!(r.time > 0.0)) bad("observed time must be positive");
  if (!(r.entry < r.time)) bad("L >= Ttilde");
  if (r.covariates.size() != p) bad("covariate vector length mismatch");
  for (double z : r.covariates) {
    if (!std::isfinite(z)) bad("non-finite covariate");
  }
}

}  // namespace

Scenario parse_scenario(std::string_view tag) {
  std::string t;
  for (char ch : tag) t.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
  if (t == "a1") return Scenario::A1;
  if (t == "a2") return Scenario::A2;
  if (t == "b1") return Scenario::B1;
  if (t == "b2") return Scenario::B2;
  throw Error(ErrorKind::Usage, "unknown scenario '" + std::string(tag) + "' (expected a1, a2, b1, b2)");
}

std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::A1: return "A1";
    case Scenario::A2: return "A2";
    case Scenario::B1: return "B1";
    case Scenario::B2: return "B2";
  }
  return "?";
}

Cohort::Cohort(std::vector<CohortRecord> records, std::vector<std::string> covariate_names)
    : names_(std::move(covariate_names)) {
  if (records.empty()) throw Error(ErrorKind::Ingest, "empty cohort");
  const std::size_t n = records.size(), p = names_.size();
  entry_.reserve(n);
  time_.reserve(n);
  score_.reserve(n);
  event_.reserve(n);
  covariates_.reserve(n * p);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& r = records[i];
    check_record(r, p, i);
    entry_.push_back(r.entry);
    time_.push_back(r.time);
    event_.push_back(r.event ? 1 : 0);
    score_.push_back(r.score);
    covariates_.insert(covariates_.end(), r.covariates.begin(), r.covariates.end());
  }
}

CohortRecord Cohort::record(std::size_t i) const {
  auto z = covariates(i);
  return {entry_[i], time_[i], event_[i] != 0, {z.begin(), z.end()}, score_[i]};
}

std::size_t Cohort::num_events() const {
  return static_cast<std::size_t>(std::count(event_.begin(), event_.end(), 1));
}

Cohort Cohort::subset(std::span<const std::size_t> rows) const {
  if (rows.empty()) throw Error(ErrorKind::Estimation, "empty subset");
  Cohort c;
  c.names_ = names_;
  const std::size_t p = names_.size();
  c.entry_.reserve(rows.size());
  c.time_.reserve(rows.size());
  c.score_.reserve(rows.size());
  c.event_.reserve(rows.size());
  c.covariates_.reserve(rows.size() * p);
  for (std::size_t i : rows) {
    c.entry_.push_back(entry_.at(i));
    c.time_.push_back(time_[i]);
    c.score_.push_back(score_[i]);
    c.event_.push_back(event_[i]);
    auto z = covariates(i);
    c.covariates_.insert(c.covariates_.end(), z.begin(), z.end());
  }
  return c;
}

Cohort Cohort::without_truncation() const {
  Cohort c = *this;
  std::fill(c.entry_.begin(), c.entry_.end(), 0.0);
  return c;
}

Cohort Cohort::with_covariates(std::vector<double> matrix, std::vector<std::string> names) const {
  if (matrix.size() != size() * names.size()) {
    throw Error(ErrorKind::Estimation, "covariate matrix has the wrong shape");
  }
  Cohort c = *this;
  c.covariates_ = std::move(matrix);
  c.names_ = std::move(names);
  return c;
}

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find(',', start);
    if (end == std::string_view::npos) end = text.size();
    std::string item = trim(text.substr(start, end - start));
    if (!item.empty()) out.push_back(item);
    start = end + 1;
  }
  return out;
}

IngestResult ingest_csv(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Ingest, "cannot open '" + path + "'");
  return ingest_csv(in, schema);
}

IngestResult ingest_csv(std::istream& in, const CsvSchema& schema) {
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::Ingest, "missing header row");
  auto header = split_csv_line(line);
  std::unordered_map<std::string, std::size_t> column;
  for (std::size_t k = 0; k < header.size(); ++k) column.emplace(header[k], k);
  auto find = [&](const std::string& name) {
    auto it = column.find(name);
    if (it == column.end()) throw Error(ErrorKind::Ingest, "missing column '" + name + "'");
    return it->second;
  };
  const std::size_t c_entry = find(schema.entry), c_time = find(schema.time), c_event = find(schema.event),
                    c_score = find(schema.score);
  std::vector<std::size_t> c_cov;
  for (const auto& name : schema.covariates) c_cov.push_back(find(name));

  std::vector<CohortRecord> records;
  std::vector<RowError> rejected;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto cells = split_csv_line(line);
    auto cell = [&](std::size_t k) -> const std::string& {
      static const std::string blank;
      return k < cells.size() ? cells[k] : blank;
    };
    bool missing = false;
    auto number = [&](std::size_t k, const std::string& name) -> double {
      const auto& s = cell(k);
      if (s.empty() || s == "NA" || s == "NaN") {
        missing = true;
        return 0.0;
      }
      auto v = parse_number(s);
      if (!v) {
        throw Error(ErrorKind::Ingest,
                    "line " + std::to_string(line_no) + ": non-numeric cell '" + s + "' in column '" + name + "'");
      }
      return *v;
    };
    CohortRecord r;
    r.entry = number(c_entry, schema.entry);
    r.time = number(c_time, schema.time);
    double ev = number(c_event, schema.event);
    r.score = number(c_score, schema.score);
    for (std::size_t k = 0; k < c_cov.size(); ++k) r.covariates.push_back(number(c_cov[k], schema.covariates[k]));
    if (missing) {
      rejected.push_back({line_no, "missing value"});
      continue;
    }
    if (ev != 0.0 && ev != 1.0) {
      throw Error(ErrorKind::Ingest, "line " + std::to_string(line_no) + ": event column must be 0 or 1");
    }
    r.event = ev == 1.0;
    if (!std::isfinite(r.entry) || !std::isfinite(r.time) || !std::isfinite(r.score)) {
      rejected.push_back({line_no, "non-finite value"});
    } else if (r.entry < 0.0) {
      rejected.push_back({line_no, "negative entry time"});
    } else if (!(r.time > 0.0)) {
      rejected.push_back({line_no, "Ttilde <= 0"});
    } else if (!(r.entry < r.time)) {
      rejected.push_back({line_no, "L >= Ttilde"});
    } else {
      records.push_back(std::move(r));
    }
  }
  if (records.empty()) throw Error(ErrorKind::Ingest, "empty cohort after validation");
  return {Cohort(std::move(records), schema.covariates), std::move(rejected)};
}

void write_csv(const Cohort& cohort, std::ostream& out, const CsvSchema& schema) {
  out << schema.entry << ',' << schema.time << ',' << schema.event << ',' << schema.score;
  const auto& names = schema.covariates.empty() ? cohort.covariate_names() : schema.covariates;
  for (const auto& name : names) out << ',' << name;
  out << '\n';
  for (std::size_t i = 0; i < cohort.size(); ++i) {
    out << full_precision(cohort.entry()[i]) << ',' << full_precision(cohort.time()[i]) << ','
        << int(cohort.event()[i]) << ',' << full_precision(cohort.score()[i]);
    for (double z : cohort.covariates(i)) out << ',' << full_precision(z);
    out << '\n';
  }
}

std::vector<std::string> validate_scenario(const Cohort& cohort, Scenario /*scenario*/) {
  // C > L cannot be checked from observed data under A-scenarios; only soft checks remain.
  std::vector<std::string> warnings;
  const std::size_t events = cohort.num_events();
  if (events == 0) {
    warnings.emplace_back("no events");
  } else if (events < 2) {
    warnings.emplace_back("fewer than 2 events");
  }
  for (std::size_t k = 0; k < cohort.num_covariates(); ++k) {
    const double first = cohort.covariates(0)[k];
    bool constant = true;
    for (std::size_t i = 1; i < cohort.size() && constant; ++i) constant = cohort.covariates(i)[k] == first;
    if (constant) warnings.push_back("zero-variance covariate " + cohort.covariate_names()[k]);
  }
  return warnings;
}

}  // namespace ltroc
