#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "ovp/ensembles.hpp"

namespace ovp {

enum class ExperimentKind {
  SvFractionSweep,
  RegimeSweepQ,
  RegimeSweepN,
  MarginSweep,
  FourierSweep,
  EquivalenceCheck,
};

const char* to_string(ExperimentKind kind) noexcept;

/// Default bound on n * d matrix entries per trial (about 160 MB of doubles).
inline constexpr double kDefaultMaxEntries = 2e7;

struct ExperimentConfig {
  ExperimentKind experiment = ExperimentKind::SvFractionSweep;
  EnsembleSpec ensemble;
  SignalSpec signal;
  std::vector<double> sweep_values;
  std::size_t trials = 20;
  std::size_t n_test = 0;
  std::uint64_t base_seed = 0;
  std::map<std::string, double> tolerances;
  std::string output_path;
  // Execution settings; they do not change results.
  std::size_t threads = 0;  // 0 = hardware concurrency
  double max_entries = kDefaultMaxEntries;
  // Run the hard-margin SVM alongside min-norm in regime sweeps.
  bool svm = true;
};

/// Parses a JSON config. Unknown keys, wrong types and invariant violations
/// throw ConfigError whose message starts with the offending field path.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::string& path);

/// Parses an ensemble object such as {"type": "BiLevel", "n": 529, ...}.
EnsembleSpec parse_ensemble(const std::string& json_text);

/// Checks cross-field invariants; throws ConfigError.
void validate(const ExperimentConfig& config);

/// Canonical JSON of the result-affecting fields.
std::string canonical_json(const ExperimentConfig& config);

/// FNV-1a 64 of canonical_json.
std::uint64_t config_hash(const ExperimentConfig& config);

/// Tolerance keys each experiment reads unconditionally.
std::vector<std::string> required_tolerances(ExperimentKind kind);

/// Ensemble after substituting one sweep value into the swept field.
EnsembleSpec swept_ensemble(const ExperimentConfig& config, double value);

/// Largest n * d over the sweep.
double required_entries(const ExperimentConfig& config);

/// Trial seed: derive_seed(derive_seed(base, value_index), trial_index).
std::uint64_t trial_seed(std::uint64_t base_seed, std::size_t value_index,
                         std::size_t trial_index) noexcept;

/// Version of the CSV column layout. New metrics only ever append columns.
inline constexpr int kCsvSchemaVersion = 1;

/// Identifier columns followed by metric columns, in CSV order.
const std::vector<std::string>& csv_columns();
const std::vector<std::string>& metric_names();

struct ResultRow {
  std::string experiment;
  double sweep_value = 0.0;
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  std::size_t n = 0;
  std::size_t d = 0;
  std::string regime;  // empty unless the experiment classifies (p, q, r)
  std::map<std::string, double> metrics;

  /// Throws InvalidParams for a name outside metric_names().
  void set(const std::string& name, double value);
  std::optional<double> get(const std::string& name) const;
};

/// Runs every (sweep value, trial) job on a worker pool and hands rows to
/// `sink` in (value, trial) order from the calling thread. Row values do not
/// depend on the thread count.
void run_experiment(const ExperimentConfig& config,
                    const std::function<void(const ResultRow&)>& sink);

std::vector<ResultRow> run_experiment(const ExperimentConfig& config);

/// Formats a double with 17 significant digits ("nan", "inf", "-inf" for
/// non-finite values).
std::string format_double(double value);

std::string csv_header();
std::string csv_line(const ResultRow& row);
std::vector<ResultRow> read_csv(const std::string& path);

struct RunSummary {
  std::size_t rows = 0;
  double wall_seconds = 0.0;
  std::uint64_t config_hash = 0;
};

/// Runs the sweep and writes config.output_path plus <output_path>.meta.json.
RunSummary run_to_csv(const ExperimentConfig& config);

struct Check {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  std::string detail;
};

struct VerdictReport {
  std::vector<Check> checks;

  bool all_passed() const noexcept;
  const Check* find(const std::string& name) const noexcept;
};

/// Evaluates the acceptance predicates of the configured experiment. Throws
/// IncompleteData when a (value, trial) row or a needed metric is missing.
VerdictReport verdict(const ExperimentConfig& config,
                      const std::vector<ResultRow>& rows);

/// Median of the finite entries; NaN when none.
double median(std::vector<double> values);

}  // namespace ovp
