#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace ltroc {

/// One left-truncated right-censored observation.
struct CohortRecord {
  double entry = 0.0;  // L
  double time = 0.0;   // censored event time
  bool event = false;  // 1 = event observed
  std::vector<double> covariates;
  double score = 0.0;  // higher = higher predicted risk
};

/// Relationship between censoring and study entry, crossed with marginal (1)
/// versus covariate-conditional (2) independence.
enum class Scenario { A1, A2, B1, B2 };

/// A-scenarios: censoring always follows entry.
constexpr bool censoring_after_entry(Scenario s) { return s == Scenario::A1 || s == Scenario::A2; }
Scenario parse_scenario(std::string_view tag);
std::string to_string(Scenario s);

/// Immutable, validated LTRC sample. Columns are stored contiguously so the
/// estimators can walk them without copying.
class Cohort {
 public:
  /// Validates every record; throws Error(Ingest) on the first violation.
  Cohort(std::vector<CohortRecord> records, std::vector<std::string> covariate_names);

  std::size_t size() const { return entry_.size(); }
  std::size_t num_covariates() const { return names_.size(); }
  const std::vector<std::string>& covariate_names() const { return names_; }

  std::span<const double> entry() const { return entry_; }
  std::span<const double> time() const { return time_; }
  std::span<const unsigned char> event() const { return event_; }
  std::span<const double> score() const { return score_; }
  /// Covariate row of record i.
  std::span<const double> covariates(std::size_t i) const {
    return {covariates_.data() + i * names_.size(), names_.size()};
  }

  CohortRecord record(std::size_t i) const;
  std::size_t num_events() const;

  /// Records at the given positions, in that order (duplicates allowed).
  Cohort subset(std::span<const std::size_t> rows) const;
  /// Same cohort with every entry time set to zero.
  Cohort without_truncation() const;
  /// Same records with a replaced covariate matrix (row-major, n x names.size()).
  Cohort with_covariates(std::vector<double> matrix, std::vector<std::string> names) const;

 private:
  Cohort() = default;
  std::vector<double> entry_, time_, score_, covariates_;
  std::vector<unsigned char> event_;
  std::vector<std::string> names_;
};

/// Column mapping for CSV ingestion.
struct CsvSchema {
  std::string entry = "entry";
  std::string time = "time";
  std::string event = "event";
  std::string score = "x";
  std::vector<std::string> covariates;
};

struct RowError {
  std::size_t line = 0;  // 1-based line number in the file, header is line 1
  std::string message;
};

struct IngestResult {
  Cohort cohort;
  std::vector<RowError> rejected;
};

/// Reads a header-first CSV. Rows with missing cells or L >= Ttilde are
/// rejected and reported; structural problems throw Error(Ingest).
IngestResult ingest_csv(const std::string& path, const CsvSchema& schema);
IngestResult ingest_csv(std::istream& in, const CsvSchema& schema);

/// Writes the cohort with the schema's column names at full precision.
void write_csv(const Cohort& cohort, std::ostream& out, const CsvSchema& schema);

/// Soft checks; never throws.
std::vector<std::string> validate_scenario(const Cohort& cohort, Scenario scenario);

/// Splits a comma-separated list, trimming blanks.
std::vector<std::string> split_list(std::string_view text);

}  // namespace ltroc
