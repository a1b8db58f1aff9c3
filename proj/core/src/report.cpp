#include <chrono>
#include <fstream>
#include <map>
#include <string>
#include <unordered_map>

#include <fmt/format.h>

#include "contina/error.hpp"
#include "contina/harness.hpp"
#include "csv.hpp"

namespace contina {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCategory::kIo, "cannot write '" + path.string() + "'");
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw Error(ErrorCategory::kIo, "failed writing '" + path.string() + "'");
}

std::string month_label(std::int64_t hour) {
  const std::int64_t day = hour >= 0 ? hour / 24 : -((-hour + 23) / 24);
  const std::chrono::year_month_day ymd{std::chrono::sys_days{std::chrono::days{day}}};
  return fmt::format("{:04d}-{:02d}", static_cast<int>(ymd.year()), static_cast<unsigned>(ymd.month()));
}

std::string num(double v) { return fmt::format("{:.8f}", v); }

void write_summary(const RunLedger& ledger, const RunInfo& info, const ExperimentConfig& config,
                   const std::filesystem::path& dir) {
  const auto path = dir / "summary.csv";
  auto out = open_out(path);
  const bool bounded = config.method == Method::kContina;
  const double c = bounded ? theorem1_constant(config.hp).c : 0.0;
  out << "period,steps,cov,minRC,length,empty_rate,theorem1_bound\n";
  auto row = [&](const std::string& label, const PeriodSummary& s) {
    const auto steps = s.end - s.begin;
    out << fmt::format("{},{},{},{},{},{},{}\n", label, steps, num(s.coverage), num(s.min_regional.value),
                       num(s.length), num(s.empty_rate),
                       bounded ? num(c / static_cast<double>(steps)) : std::string());
  };
  for (const auto& p : reporting_periods(info, ledger.horizon())) {
    row(p.label, summarize_period(ledger, p.begin, p.end));
  }
  row("AVG", summarize_period(ledger, 0, static_cast<std::int64_t>(ledger.horizon())));
  finish(out, path);
}

void write_daily(const RunLedger& ledger, const RunInfo& info, const ExperimentConfig& config,
                 const std::filesystem::path& dir) {
  const auto names = [&](std::size_t i) {
    return i < info.region_names.size() ? info.region_names[i] : std::to_string(i);
  };
  {
    const auto path = dir / "daily_region_coverage.csv";
    auto out = open_out(path);
    out << "day,region,covered,cells,coverage,mean_length,empty,partial\n";
    for (const auto& d : daily_region_counts(ledger, config.steps_per_day)) {
      const double cells = static_cast<double>(d.cells);
      out << fmt::format("{},{},{},{},{},{},{},{}\n", d.day, names(d.region), d.covered, d.cells,
                         num(static_cast<double>(d.covered) / cells), num(d.length_sum / cells), d.empty,
                         d.partial ? 1 : 0);
    }
    finish(out, path);
  }
  {
    const auto path = dir / "daily_summary.csv";
    auto out = open_out(path);
    out << "day,mean_coverage,std_coverage\n";
    for (const auto& d : daily_regional_stats(ledger, config.steps_per_day).days) {
      out << fmt::format("{},{},{}\n", d.day, num(d.mean_coverage), num(d.std_coverage));
    }
    finish(out, path);
  }
}

}  // namespace

std::vector<Period> reporting_periods(const RunInfo& info, std::size_t horizon) {
  std::vector<Period> out;
  if (info.dated && info.step_times.size() == horizon) {
    for (std::size_t s = 0; s < horizon; ++s) {
      const std::string label = month_label(info.step_times[s]);
      if (out.empty() || out.back().label != label) {
        out.push_back({label, static_cast<std::int64_t>(s), static_cast<std::int64_t>(s)});
      }
      out.back().end = static_cast<std::int64_t>(s) + 1;
    }
    return out;
  }
  const std::size_t epochs = std::min<std::size_t>(4, horizon);
  for (std::size_t e = 0; e < epochs; ++e) {
    out.push_back({fmt::format("epoch{}", e + 1), static_cast<std::int64_t>(e * horizon / epochs),
                   static_cast<std::int64_t>((e + 1) * horizon / epochs)});
  }
  return out;
}

void write_report(const RunResult& result, const ExperimentConfig& config,
                  const std::filesystem::path& out_dir, bool write_ledger) {
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCategory::kIo, "cannot create '" + out_dir.string() + "': " + ec.message());
  const RunLedger& ledger = result.ledger;
  write_summary(ledger, result.info, config, out_dir);
  write_daily(ledger, result.info, config, out_dir);

  const auto name = [&](std::size_t i) { return result.info.region_names.at(i); };
  {
    const auto path = out_dir / "regions.csv";
    auto out = open_out(path);
    const std::vector<double> coverage = regional_coverages(ledger);
    out << "region,coverage,initial_alpha,final_alpha,final_moment,rate_weighted_error\n";
    for (std::size_t i = 0; i < ledger.n_regions(); ++i) {
      out << fmt::format("{},{},{},{},{},{}\n", name(i), num(coverage[i]), result.initial_states[i].alpha,
                         result.final_states[i].alpha, result.final_states[i].moment,
                         result.rate_weighted_error[i]);
    }
    finish(out, path);
  }
  if (write_ledger) {
    const auto path = out_dir / "ledger.csv";
    auto out = open_out(path);
    out << "step,time,region,flow,covered,length,empty\n";
    for (const auto& r : ledger.records()) {
      out << fmt::format("{},{},{},{},{},{},{}\n", r.t, result.info.step_times.at(static_cast<std::size_t>(r.t)),
                         name(r.region), to_string(r.flow), r.covered ? 1 : 0, r.length, r.empty ? 1 : 0);
    }
    finish(out, path);
  }
  {
    const auto path = out_dir / "run_manifest.toml";
    auto out = open_out(path);
    out << to_manifest_text(config);
    out << "\n[result]\n";
    out << fmt::format("dated = {}\n", result.info.dated ? "true" : "false");
    out << fmt::format("n_regions = {}\n", ledger.n_regions());
    out << fmt::format("horizon = {}\n", ledger.horizon());
    out << fmt::format("calibration_steps = {}\n", result.calibration_steps);
    out << fmt::format("window_capacity = {}\n", result.window_capacity);
    out << fmt::format("crossed_forecasts = {}\n", result.diagnostics.crossed_forecasts);
    out << fmt::format("empty_intervals = {}\n", result.diagnostics.empty_intervals);
    out << fmt::format("inflated_quantiles = {}\n", result.diagnostics.inflated_quantiles);
    finish(out, path);
  }
}

RunLedger read_ledger_csv(const std::filesystem::path& path, RunInfo& info) {
  const std::string file = path.string();
  std::ifstream in(path);
  if (!in) throw Error(ErrorCategory::kIo, "cannot open ledger '" + file + "'");
  std::string line;
  if (!std::getline(in, line)) csv::fail(file, 1, "empty file");
  csv::expect_header(line, "step,time,region,flow,covered,length,empty", file);

  std::vector<CellRecord> records;
  std::unordered_map<std::string, std::size_t> index;
  info.region_names.clear();
  std::map<std::int64_t, std::int64_t> times;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = csv::split(line);
    if (f.size() != 7) csv::fail(file, line_no, "expected 7 fields");
    CellRecord r;
    r.t = csv::to_int(f[0], file, line_no, "step");
    times[r.t] = csv::to_int(f[1], file, line_no, "time");
    auto [it, fresh] = index.emplace(std::string(f[2]), info.region_names.size());
    if (fresh) info.region_names.emplace_back(f[2]);
    r.region = it->second;
    try {
      r.flow = parse_flow(f[3]);
    } catch (const Error& e) {
      csv::fail(file, line_no, e.what());
    }
    r.covered = csv::to_int(f[4], file, line_no, "covered") != 0;
    r.length = csv::to_double(f[5], file, line_no, "length");
    r.empty = csv::to_int(f[6], file, line_no, "empty") != 0;
    records.push_back(r);
  }
  if (records.empty()) csv::fail(file, line_no, "no ledger rows");
  info.step_times.clear();
  for (const auto& [step, time] : times) info.step_times.push_back(time);
  RunLedger ledger(info.region_names.size(), times.size());
  ledger.records() = std::move(records);
  ledger.check_complete();
  return ledger;
}

void report_from_files(const std::filesystem::path& ledger_path, const std::filesystem::path& manifest_path,
                       const std::filesystem::path& out_dir) {
  const Manifest manifest = load_manifest(manifest_path);
  RunInfo info;
  const RunLedger ledger = read_ledger_csv(ledger_path, info);
  info.dated = manifest.dated;
  std::error_code ec;
  std::filesystem::create_directories(out_dir, ec);
  if (ec) throw Error(ErrorCategory::kIo, "cannot create '" + out_dir.string() + "': " + ec.message());
  write_summary(ledger, info, manifest.config, out_dir);
  write_daily(ledger, info, manifest.config, out_dir);
}

}  // namespace contina
