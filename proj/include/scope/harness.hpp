#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "scope/controller.hpp"
#include "scope/metrics.hpp"
#include "scope/model.hpp"
#include "scope/sim.hpp"
#include "scope/space.hpp"

namespace scope::harness {

inline constexpr int kSchemaVersion = 1;

struct PolicyConfig {
  PolicyKind kind = PolicyKind::scope;
  double gamma = 1.0;
  ModelKind model = ModelKind::gaussian_process;
  /// StageOPT expansion length as a fraction of the run's estimated intervals.
  double stage1_fraction = 0.25;
  std::optional<std::size_t> stage1_len;
  double beta = 2.0;
  double offline_fraction = 0.5;
  double rapl_deadband = 0.05;

  /// gamma actually used (scope-no is +inf).
  double effective_gamma() const;
};

struct StartRule {
  enum class Kind { bands, explicit_ids };
  Kind kind = Kind::bands;
  std::size_t fast = 5;
  std::size_t slow = 5;
  double fast_percentile = 35.0;
  double slow_percentile = 65.0;
  std::vector<ConfigId> ids;
};

struct WorkloadSource {
  bool default_suite = true;
  std::uint64_t suite_seed = 2023;
  std::optional<sim::ScenarioKind> scenario;
  std::uint64_t scenario_seed = 1;
  sim::ScenarioOptions options;
  std::vector<sim::WorkloadSpec> explicit_workloads;
};

struct TraceOutput {
  std::vector<PolicyKind> policies;
  std::size_t max_runs = 0;
};

struct ExperimentConfig {
  int schema_version = kSchemaVersion;
  std::uint64_t master_seed = 1;
  std::vector<ParamSpec> space = default_params();
  WorkloadSource workloads;
  std::vector<PolicyConfig> policies;
  std::vector<double> constraint_percentiles{40, 50, 60, 70, 80};
  StartRule starts;
  int interval_sec = 10;
  /// Max measurements per interval; defaults to interval_sec.
  std::optional<int> max_samples;
  int repetitions = 1;
  Hyperparameters hyper;
  std::vector<int> interval_sweep{5, 10, 20, 30};
  std::vector<double> gamma_sweep{0.0, 0.5, 1.0, 1.5, 2.0, 4.0};
  std::vector<double> offline_fraction_sweep{0.25, 0.5, 0.75, 1.0};
  std::vector<ModelKind> model_sweep{ModelKind::gaussian_process, ModelKind::linear};
  std::filesystem::path output_dir = "results";
  TraceOutput traces;
  int jobs = 1;

  void validate() const;
};

/// Parses the YAML experiment file. Unknown keys are rejected.
ExperimentConfig load_config(const std::filesystem::path& path);
ExperimentConfig parse_config(const std::string& yaml_text);

/// Config with all eight policies on the twelve default workloads.
ExperimentConfig default_config();

std::vector<sim::WorkloadSpec> resolve_workloads(const ExperimentConfig& cfg, const ConfigSpace& space);

/// Linear-interpolation percentile (0 = min, 100 = max) of `values`.
double percentile(std::vector<double> values, double pct);

/// Power caps at the requested percentiles of the true max-over-phases power over the grid.
std::vector<double> derive_constraints(const ConfigSpace& space, const sim::WorkloadSpec& w,
                                       std::span<const double> percentiles);

struct StartConfig {
  ConfigId id;
  std::string kind;  // "fast", "slow" or "explicit"
};

/// Starting configurations among truly safe ones: fast below the
/// fast_percentile of safe latency, slow above slow_percentile, sampled with `seed`.
std::vector<StartConfig> derive_start_configs(const ConfigSpace& space, const sim::WorkloadSpec& w, double cap,
                                              const StartRule& rule, std::uint64_t seed);

struct ResultRow {
  std::string policy;
  std::string workload;
  double percentile;
  double cap;
  ConfigId start_id;
  std::string start_kind;
  double gamma;  // NaN when not applicable
  int interval_sec;
  int max_samples;
  std::string model;     // empty when not applicable
  double offline_fraction;  // NaN when not applicable
  int rep;
  std::uint64_t seed;
  metrics::MetricsReport report;
  std::size_t intervals = 0;
  double decision_us_mean = 0.0;  // wall clock, kept out of the results CSV
};

enum class SweepKind { gamma, interval, model, offline_fraction };
SweepKind parse_sweep_kind(std::string_view text);
std::string_view to_string(SweepKind kind);

/// Receives each finished row in matrix order; `trace` is non-null for runs
/// selected by ExperimentConfig::traces.
using RowSink = std::function<void(const ResultRow& row, const sim::Trace* trace)>;

/// Number of rows run_matrix will produce.
std::size_t matrix_cardinality(const ExperimentConfig& cfg, std::size_t workload_count, std::size_t starts_per_cap);

/// Runs every (workload, cap, start, repetition, policy) combination. Rows
/// arrive at `sink` in matrix order regardless of `cfg.jobs`.
std::vector<ResultRow> run_matrix(const ExperimentConfig& cfg, const RowSink& sink = {});

/// run_matrix with one axis varied over its sweep list.
std::vector<ResultRow> sweep(SweepKind kind, const ExperimentConfig& cfg, const RowSink& sink = {});

/// Stable 64-bit seed for a row key.
std::uint64_t derive_seed(std::uint64_t master, std::string_view key);

// CSV ---------------------------------------------------------------------

std::string results_header();
std::string format_row(const ResultRow& row);
std::string trace_header();

using Table = std::vector<std::map<std::string, std::string>>;
Table read_csv(const std::filesystem::path& path);
Table parse_csv(const std::string& text);

/// Group-wise means of the metric columns. Violation magnitude is reported
/// both over all rows and over rows with a nonzero magnitude.
Table report_data(const Table& rows, const std::vector<std::string>& group_by);

/// For each (policy, workload), the interval with the lowest mean violation
/// rate; ties go to the shorter interval.
Table best_interval(const Table& rows);

void write_table(std::ostream& out, const Table& table, const std::vector<std::string>& columns);

std::string workload_to_yaml(const std::vector<sim::WorkloadSpec>& workloads);
std::vector<sim::WorkloadSpec> workloads_from_yaml(const std::string& yaml_text);

/// Writes results.csv, timings.csv, manifest.json and any requested traces
/// under cfg.output_dir. Returns the rows.
std::vector<ResultRow> execute(const ExperimentConfig& cfg, std::optional<SweepKind> sweep_kind);

}  // namespace scope::harness
