#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "contina/adaptation.hpp"
#include "contina/conformal.hpp"
#include "contina/datagen.hpp"
#include "contina/metrics.hpp"
#include "contina/observation.hpp"
#include "contina/predictors.hpp"

namespace contina {

enum class Method { kCp, kQcp, kAciFixed, kContina };

std::string_view to_string(Method method) noexcept;
Method parse_method(std::string_view text);

// What to do when the demand file has missing hours or cells.
enum class GapPolicy { kAbort, kDropDay };

std::string_view to_string(GapPolicy policy) noexcept;
GapPolicy parse_gap_policy(std::string_view text);

struct ExperimentConfig {
  Method method = Method::kContina;
  AdaptHyperParams hp;
  double aci_gamma = 0.005;  // fixed rate for kAciFixed
  PredictorSpec predictor;
  // Calibration window capacity; 0 means "size of the calibration segment".
  std::size_t window = 0;
  bool online_predictor = false;
  // cp / qcp keep their calibration set frozen unless this is set.
  bool slide_static_windows = false;
  bool clamp_nonnegative = false;

  // Data source: synthetic when demand_csv is empty.
  StreamSpec synthetic;
  std::string demand_csv;
  std::string forecast_csv;
  double filter_threshold = 2.0;
  bool filter_per_flow = false;
  GapPolicy gap_policy = GapPolicy::kAbort;

  double train_frac = 0.6;
  double calib_frac = 0.1;
  std::int64_t steps_per_day = 24;
  std::uint64_t seed = 1;  // also seeds the synthetic stream
  std::size_t threads = 1;

  bool audit = false;
  bool record_trajectories = false;

  void validate() const;
};

// Applies one `key = value` setting. Keys match the manifest and CLI names
// (method, alpha, gamma1, beta, epsilon, aci_gamma, window, predictor, ...).
// Regime parameters select their regime: `shift_scale` switches the stream
// to abrupt_shift, `scale_lo` to heterogeneous, and so on, keeping the
// parameters already set when the regime does not change.
// Throws Error(kInvalidArgument) for unknown keys or unparsable values.
void apply_setting(ExperimentConfig& config, std::string_view key, std::string_view value);

// Facts derived from a run that a later `report` needs.
struct RunInfo {
  bool dated = false;
  std::vector<std::string> region_names;
  std::vector<std::int64_t> step_times;
};

// Reads a TOML-style key/value file: top-level keys are settings; the
// [result] section that write_report appends is skipped.
ExperimentConfig load_config_file(const std::filesystem::path& path);

// Like load_config_file, plus the `dated` flag from the [result] section.
struct Manifest {
  ExperimentConfig config;
  bool dated = false;
};
Manifest load_manifest(const std::filesystem::path& path);

// Serialized settings, reloadable with load_config_file.
std::string to_manifest_text(const ExperimentConfig& config);

// Demand stream ready for replay: regions densely indexed after filtering.
struct Dataset {
  std::vector<Observation> stream;  // ordered by (t, region, flow)
  std::vector<std::string> region_names;
  std::vector<std::size_t> dropped_regions;  // indices before re-indexing
  std::vector<std::string> dropped_region_names;
  bool dated = false;
  std::shared_ptr<const ForecastTable> forecasts;
  std::vector<std::string> warnings;
};

struct IngestOptions {
  double filter_threshold = 2.0;
  bool filter_per_flow = false;
  GapPolicy gap_policy = GapPolicy::kAbort;
};

// Parses `t,region,inflow,outflow` (t an integer hour or a
// `YYYY-MM-DD HH[:MM[:SS]]` timestamp), rejects malformed rows with their line
// number, filters low-demand regions, sorts chronologically, checks for gaps
// and derives the six lag features from earlier rows of the same series.
// Every row becomes an observation; lags missing at the start of the file
// repeat the oldest earlier value (zero for the first row).
// A non-empty `forecast_path` loads `t,region,flow,q_lo,q_hi` alongside.
Dataset ingest_csv(const std::string& demand_path, const std::string& forecast_path,
                   const IngestOptions& options = {});

// Synthetic stream or ingested files, as the config says.
Dataset load_dataset(const ExperimentConfig& config);

// Writes `t,region,inflow,outflow` for a stream (regions by dense index).
void write_demand_csv(const std::filesystem::path& path, std::span<const Observation> stream,
                      const std::vector<std::string>& region_names = {});

// Snapshot of one emitted interval and the state it was built from.
struct AuditRecord {
  std::size_t region = 0;
  std::int64_t step = 0;
  Flow flow = Flow::kIn;
  Features features;
  std::vector<double> window_scores;
  std::size_t window_capacity = 0;
  double alpha = 0.0;
  double forecast_lo = 0.0;
  double forecast_hi = 0.0;
  PredictionInterval emitted = PredictionInterval::empty();
};

struct RunDiagnostics {
  std::size_t crossed_forecasts = 0;
  std::size_t empty_intervals = 0;
  std::size_t inflated_quantiles = 0;
};

struct RunResult {
  RunLedger ledger{1, 1};
  std::vector<RegionAdaptState> initial_states;
  std::vector<RegionAdaptState> final_states;
  // Per region: sum over steps of rate_t * (target - err_t).
  std::vector<double> rate_weighted_error;
  // Per region alpha before each step, when record_trajectories is set.
  std::vector<std::vector<double>> alpha_trajectories;
  RunInfo info;
  RunDiagnostics diagnostics;
  std::optional<AuditRecord> audit;
  std::vector<std::string> warnings;
  std::size_t calibration_steps = 0;
  std::size_t window_capacity = 0;
};

// One predict -> interval -> observe -> score -> adapt cycle per
// (step, region) over the deployment segment. Regions run in parallel on
// `config.threads` workers; the result does not depend on the thread count.
RunResult run_replay(const ExperimentConfig& config, const Dataset& data);
RunResult run_replay(const ExperimentConfig& config);

// Rebuilds the interval of an audit record from its logged state alone.
PredictionInterval rederive_interval(const AuditRecord& record, const ExperimentConfig& config);

// summary.csv, daily_region_coverage.csv, daily_summary.csv, regions.csv and
// run_manifest.toml under `out_dir`; ledger.csv too when `write_ledger`.
void write_report(const RunResult& result, const ExperimentConfig& config,
                  const std::filesystem::path& out_dir, bool write_ledger = true);

// Reporting periods as half-open step ranges with labels: calendar months
// for dated runs, otherwise four equal epochs.
struct Period {
  std::string label;
  std::int64_t begin = 0;
  std::int64_t end = 0;
};
std::vector<Period> reporting_periods(const RunInfo& info, std::size_t horizon);

// Reads back a ledger.csv written by write_report.
RunLedger read_ledger_csv(const std::filesystem::path& path, RunInfo& info);

// Regenerates the summary and daily files from ledger.csv + run_manifest.toml.
void report_from_files(const std::filesystem::path& ledger_path,
                       const std::filesystem::path& manifest_path,
                       const std::filesystem::path& out_dir);

}  // namespace contina
