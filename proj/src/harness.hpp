// Licensed under the Apache License 2.0 (see LICENSE file).

#pragma once

#include "benchmarks.hpp"
#include "datagen.hpp"
#include "group_lasso.hpp"
#include "metrics.hpp"
#include "selection.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace deasel::harness {

using numlin::Vector;

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kReportFormat = "deasel-report/1";

/// {0} followed by 20 log-spaced points on [1e-3, 1e2].
std::vector<double> default_lambda_grid();

struct GlParams {
  /// Empty: CCR for CRS, BCC for VRS.
  std::optional<dea::ModelKind> model;
  dea::Rts rts = dea::Rts::CRS;
  /// Divide every row by its mean before building the GL problem.
  bool normalize = true;
  std::vector<double> lambda_grid = default_lambda_grid();
  double tau = 0.05;
  double training_fraction = 0.10;
  /// Skips tuning when set.
  std::optional<double> lambda;
  double mu = 1.0;
  int max_iterations = 5000;
  /// Empty: 1e-6 * sqrt(total rows) of each problem.
  std::optional<double> admm_tolerance;
  double selection_threshold = 1e-6;

  dea::ModelKind model_kind() const;
  void validate() const;
};

struct TuningPoint {
  double lambda = 0.0;
  double loss = 0.0;
  bool converged = false;
  int iterations = 0;
};

struct TuningResult {
  double lambda = 0.0;
  std::vector<TuningPoint> points;
  std::size_t skipped = 0;
  std::vector<std::string> warnings;
};

/// Training-slice size: ceil(fraction * n), at least 5 and at most n.
std::size_t training_size(std::size_t n, double fraction);

/// Elbow rule on the unpenalized loss f: the largest grid lambda whose
/// converged solve has f <= f_ref + tau * |f_ref|, f_ref being the loss at
/// the smallest converged grid point (lambda = 0 on the default grid).
/// Throws Error{Tuning} when no grid point converges.
TuningResult tune_lambda(const dea::DataSet& train, dea::ModelKind model, const std::vector<double>& grid, double tau,
                         const GlParams& params);

struct GlOutcome {
  SelectionResult selection;
  std::optional<TuningResult> tuning;
};

/// Tunes lambda on the leading training slice (unless fixed) and re-solves
/// on the whole panel.
GlOutcome gl_select(const dea::DataSet& data, const GlParams& params);

// Panel CSV: header row, columns "in:<label>" then "out:<label>", one DMU
// per row.
dea::DataSet read_panel_csv(const std::filesystem::path& path);
dea::DataSet parse_panel_csv(const std::string& text);
std::string format_panel_csv(const dea::DataSet& data);
void write_panel_csv(const dea::DataSet& data, const std::filesystem::path& path);

struct ExperimentConfig {
  std::vector<datagen::Scenario> scenarios;  // already expanded per rts
  std::vector<Method> methods{Method::GL, Method::ECM, Method::RB};
  std::size_t trials = 20;
  std::uint64_t master_seed = 20240601;
  GlParams gl;  // rts is overridden per scenario
  double efficiency_tolerance = dea::kDefaultEfficiencyTol;
  bench::EcmParams ecm;
  bench::RbParams rb;
  /// Run ECM only on the first trials of each scenario when set.
  std::optional<std::size_t> ecm_max_trials;
  std::filesystem::path output_dir = "deasel-out";
  unsigned threads = 1;

  void validate() const;
};

/// Strict parse: unknown keys at any level raise Error{Input}.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
/// Canonical JSON of the result-determining fields (no output_dir/threads).
std::string canonical_config(const ExperimentConfig& config);
/// FNV-1a 64 of the canonical config, as 16 hex digits.
std::string config_hash(const ExperimentConfig& config);

struct MethodTrial {
  Method method = Method::GL;
  bool skipped = false;
  std::optional<std::string> error;
  std::vector<std::size_t> selected;
  /// Efficiency 1/theta of the selected model; empty when unavailable.
  Vector model_efficiency;
  std::optional<metrics::ScoreMetrics> score;
  std::optional<metrics::IdentificationMetrics> identification;
  double seconds = 0.0;
  // GL
  std::optional<double> lambda;
  bool converged = true;
  int iterations = 0;
  double primal_residual = 0.0;
  double dual_residual = 0.0;
  std::size_t tuning_solves = 0;
  std::size_t tuning_nonconverged = 0;
  std::size_t solver_failures = 0;
  std::vector<std::string> warnings;
};

struct TrialRecord {
  std::size_t trial = 0;
  std::uint64_t seed = 0;
  Vector true_efficiency;
  std::vector<MethodTrial> methods;
};

struct Aggregate {
  Method method = Method::GL;
  std::size_t trials = 0;  // trials the method ran in
  std::size_t scored = 0;  // trials with score metrics
  std::size_t errors = 0;
  std::optional<double> mse;
  std::optional<double> pearson;
  std::optional<double> spearman;
  std::optional<double> pct_all;
  std::optional<double> pct_efficient;
  std::optional<double> seconds;
  double exact_selection_rate = 0.0;
  std::size_t nonconverged = 0;  // GL final solves
  std::size_t tuning_nonconverged = 0;
};

struct ScenarioRun {
  datagen::Scenario scenario;
  dea::IndexSet true_inputs;
  std::vector<TrialRecord> trials;
  std::vector<Aggregate> aggregates;
};

struct ExperimentReport {
  std::string version = kVersion;
  std::string config_hash;
  std::string config_json;  // canonical
  std::uint64_t master_seed = 0;
  std::vector<Method> methods;
  std::vector<ScenarioRun> runs;
  std::filesystem::path output_dir;
  bool has_timings = true;
};

/// Per-method means over the trials in which each metric is defined.
std::vector<Aggregate> aggregate(const std::vector<TrialRecord>& trials, const std::vector<Method>& methods,
                                 const dea::IndexSet& true_inputs);

ExperimentReport run_experiment(const ExperimentConfig& config);

/// Full report without wall-clock times (deterministic bytes).
std::string report_to_json(const ExperimentReport& report);
/// Per-trial wall-clock seconds, kept beside the report.
std::string timings_to_json(const ExperimentReport& report);
ExperimentReport report_from_json(const std::string& report_json, const std::string* timings_json = nullptr);

std::string table_csv(const ExperimentReport& report, int table);  // 3..6
std::string long_csv(const ExperimentReport& report);

inline constexpr const char* kReportFile = "report.json";
inline constexpr const char* kTimingsFile = "timings.json";
inline constexpr const char* kLongFile = "metrics_long.csv";

/// Writes report.json, timings.json, table3..6.csv and metrics_long.csv.
/// Throws Error{Io} before writing anything when `dir` is not writable.
void emit_report(const ExperimentReport& report, const std::filesystem::path& dir);

/// Reads a report directory (or a report.json path) and its timings file
/// when present.
ExperimentReport load_report(const std::filesystem::path& path);

dea::ModelKind parse_model(const std::string& name);
dea::Rts parse_rts(const std::string& name);
Method parse_method(const std::string& name);

}  // namespace deasel::harness
