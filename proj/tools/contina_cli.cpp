#include <cstdio>
#include <exception>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <fmt/core.h>

#include "contina/error.hpp"
#include "contina/harness.hpp"
#include "contina/metrics.hpp"

namespace fs = std::filesystem;

namespace {

// Flags that map one-to-one onto configuration keys. Values stay strings so
// that parsing and validation live in one place (apply_setting).
struct SettingFlags {
  std::vector<std::pair<std::string, std::optional<std::string>>> values{
      {"method", {}},  {"alpha", {}},     {"gamma1", {}},    {"beta", {}},
      {"epsilon", {}}, {"window", {}},    {"predictor", {}}, {"seed", {}},
      {"gamma", {}},   {"demand_csv", {}}, {"forecast_csv", {}}, {"threads", {}},
  };
  std::vector<std::string> extra;  // --set key=value
  std::string config_path;

  void attach(CLI::App& cmd) {
    cmd.add_option("--config", config_path, "Key/value settings file (flags override it)");
    const auto flag = [&](const char* name, std::size_t i, const char* help) {
      cmd.add_option(name, values[i].second, help);
    };
    flag("--method", 0, "cp | qcp | aci_fixed | contina");
    flag("--alpha", 1, "Target miscoverage level");
    flag("--gamma1", 2, "Base learning rate for contina");
    flag("--beta", 3, "Second-moment decay for contina");
    flag("--epsilon", 4, "Rate stabilizer for contina");
    flag("--window", 5, "Calibration window capacity (0: calibration size)");
    flag("--predictor", 6, "seasonal_window | online_pinball_linear | file_backed");
    flag("--seed", 7, "Seed for the synthetic stream and the audit draw");
    flag("--gamma", 8, "Fixed learning rate for aci_fixed");
    flag("--demand", 9, "Demand CSV (t,region,inflow,outflow)");
    flag("--forecasts", 10, "Forecast CSV (t,region,flow,q_lo,q_hi)");
    flag("--threads", 11, "Worker threads for the replay");
    cmd.add_option("--set", extra, "Any other setting as key=value (repeatable)");
  }

  contina::ExperimentConfig resolve() const {
    contina::ExperimentConfig config;
    if (!config_path.empty()) config = contina::load_config_file(config_path);
    for (const auto& [key, value] : values) {
      if (!value) continue;
      contina::apply_setting(config, key == "gamma" ? "aci_gamma" : key, *value);
    }
    for (const auto& item : extra) {
      const auto eq = item.find('=');
      if (eq == std::string::npos) {
        throw contina::Error(contina::ErrorCategory::kInvalidArgument,
                             fmt::format("--set expects key=value, got '{}'", item));
      }
      contina::apply_setting(config, item.substr(0, eq), item.substr(eq + 1));
    }
    config.validate();
    return config;
  }
};

void print_summary(const contina::RunResult& result) {
  const auto& ledger = result.ledger;
  const auto min_rc = contina::min_regional_coverage(ledger);
  fmt::print("regions={} steps={} cov={:.4f} minRC={:.4f} (region {}) length={:.4f} empty={:.4f}\n",
             ledger.n_regions(), ledger.horizon(), contina::average_coverage(ledger), min_rc.value,
             result.info.region_names.at(min_rc.region), contina::mean_length(ledger),
             contina::empty_rate(ledger));
}

int run_generate(const SettingFlags& flags, const std::string& out) {
  const contina::ExperimentConfig config = flags.resolve();
  if (!config.demand_csv.empty()) {
    throw contina::Error(contina::ErrorCategory::kInvalidArgument,
                         "generate writes a synthetic stream; drop demand_csv");
  }
  const auto stream = contina::generate(config.synthetic, config.threads);
  const fs::path path = fs::path(out);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  contina::write_demand_csv(path, stream);
  fmt::print("wrote {} rows for {} regions to {}\n", stream.size() / contina::kFlowCount,
             config.synthetic.n_regions, path.string());
  return 0;
}

int run_run(const SettingFlags& flags, const std::string& out, bool no_ledger) {
  const contina::ExperimentConfig config = flags.resolve();
  const contina::Dataset data = contina::load_dataset(config);
  for (const auto& w : data.warnings) fmt::print(stderr, "warning: {}\n", w);
  const contina::RunResult result = contina::run_replay(config, data);
  for (const auto& w : result.warnings) fmt::print(stderr, "warning: {}\n", w);
  contina::write_report(result, config, out, !no_ledger);
  print_summary(result);
  return 0;
}

int run_report(const std::string& from, std::string ledger, std::string manifest,
               const std::string& out) {
  if (ledger.empty()) ledger = (fs::path(from) / "ledger.csv").string();
  if (manifest.empty()) manifest = (fs::path(from) / "run_manifest.toml").string();
  contina::report_from_files(ledger, manifest, out.empty() ? from : out);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Online conformal intervals for regional demand streams"};
  app.require_subcommand(1);

  SettingFlags gen_flags;
  std::string gen_out = "demand.csv";
  auto* gen = app.add_subcommand("generate", "Write a synthetic demand stream as CSV");
  gen_flags.attach(*gen);
  gen->add_option("--out", gen_out, "Output CSV path");

  SettingFlags run_flags;
  std::string run_out = "contina_out";
  bool no_ledger = false;
  auto* run = app.add_subcommand("run", "Replay a stream and write reports");
  run_flags.attach(*run);
  run->add_option("--out", run_out, "Report directory");
  run->add_flag("--no-ledger", no_ledger, "Skip ledger.csv");

  std::string rep_from = ".";
  std::string rep_ledger;
  std::string rep_manifest;
  std::string rep_out;
  auto* rep = app.add_subcommand("report", "Rebuild summary files from a ledger and manifest");
  rep->add_option("--from", rep_from, "Directory holding ledger.csv and run_manifest.toml");
  rep->add_option("--ledger", rep_ledger, "Ledger CSV (default: <from>/ledger.csv)");
  rep->add_option("--manifest", rep_manifest, "Manifest (default: <from>/run_manifest.toml)");
  rep->add_option("--out", rep_out, "Output directory (default: <from>)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*gen) return run_generate(gen_flags, gen_out);
    if (*run) return run_run(run_flags, run_out, no_ledger);
    if (*rep) return run_report(rep_from, rep_ledger, rep_manifest, rep_out);
  } catch (const contina::Error& e) {
    fmt::print(stderr, "error [{}]: {}\n", contina::to_string(e.category()), e.what());
    return contina::exit_code(e.category());
  } catch (const fs::filesystem_error& e) {
    fmt::print(stderr, "error [{}]: {}\n", contina::to_string(contina::ErrorCategory::kIo),
               e.what());
    return contina::exit_code(contina::ErrorCategory::kIo);
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return 1;
  }
  return 0;
}
