#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <string>
#include <unordered_map>

#include <fmt/format.h>

#include "contina/error.hpp"
#include "contina/harness.hpp"
#include "csv.hpp"

namespace contina {

namespace {

struct Row {
  std::int64_t t = 0;
  std::string region;
  double inflow = 0.0;
  double outflow = 0.0;
  std::size_t line = 0;
};

bool all_integers(const std::vector<std::string>& names) {
  return std::all_of(names.begin(), names.end(), [](const std::string& s) {
    long long v = 0;
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    return !s.empty() && ec == std::errc() && ptr == s.data() + s.size();
  });
}

std::int64_t floor_day(std::int64_t t) {
  return t >= 0 ? t / kHoursPerDay : -((-t + kHoursPerDay - 1) / kHoursPerDay);
}

}  // namespace

Dataset ingest_csv(const std::string& demand_path, const std::string& forecast_path,
                   const IngestOptions& options) {
  std::ifstream in(demand_path);
  if (!in) throw Error(ErrorCategory::kIo, "cannot open demand file '" + demand_path + "'");
  std::string line;
  if (!std::getline(in, line)) csv::fail(demand_path, 1, "empty file");
  csv::expect_header(line, "t,region,inflow,outflow", demand_path);

  Dataset data;
  std::vector<Row> rows;
  std::optional<bool> dated;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = csv::split(line);
    if (f.size() != 4) {
      csv::fail(demand_path, line_no, "expected 4 fields, got " + std::to_string(f.size()));
    }
    Row r;
    r.line = line_no;
    const csv::HourStamp stamp = csv::to_hour(f[0], demand_path, line_no);
    if (dated.has_value() && *dated != stamp.dated) {
      csv::fail(demand_path, line_no, "mixes timestamps and integer hours");
    }
    dated = stamp.dated;
    r.t = stamp.t;
    if (f[1].empty()) csv::fail(demand_path, line_no, "empty region identifier");
    r.region = std::string(f[1]);
    r.inflow = csv::to_double(f[2], demand_path, line_no, "inflow");
    r.outflow = csv::to_double(f[3], demand_path, line_no, "outflow");
    if (!std::isfinite(r.inflow) || !std::isfinite(r.outflow) || r.inflow < 0.0 || r.outflow < 0.0) {
      csv::fail(demand_path, line_no, "demand must be finite and nonnegative");
    }
    rows.push_back(std::move(r));
  }
  if (rows.empty()) throw Error(ErrorCategory::kInvalidInput, demand_path + ": no data rows");
  data.dated = dated.value_or(false);

  // Region order: numeric when every identifier is an integer.
  std::vector<std::string> names;
  {
    std::set<std::string> unique;
    for (const auto& r : rows) unique.insert(r.region);
    names.assign(unique.begin(), unique.end());
    if (all_integers(names)) {
      std::sort(names.begin(), names.end(),
                [](const std::string& a, const std::string& b) { return std::stoll(a) < std::stoll(b); });
    }
  }
  std::unordered_map<std::string, std::size_t> provisional;
  for (std::size_t k = 0; k < names.size(); ++k) provisional[names[k]] = k;

  {
    std::map<std::pair<std::int64_t, std::size_t>, std::size_t> seen;
    for (const auto& r : rows) {
      auto [it, fresh] = seen.emplace(std::pair{r.t, provisional[r.region]}, r.line);
      if (!fresh) {
        throw Error(ErrorCategory::kInvalidInput,
                    fmt::format("{}:{}: duplicate (t={}, region={}) first seen on line {}", demand_path,
                                r.line, r.t, r.region, it->second));
      }
    }
  }

  // Low-demand regions go first so they cannot trigger gap handling.
  std::vector<Observation> raw;
  raw.reserve(rows.size() * kFlowCount);
  for (const auto& r : rows) {
    raw.push_back({r.t, provisional[r.region], Flow::kIn, r.inflow, {}});
    raw.push_back({r.t, provisional[r.region], Flow::kOut, r.outflow, {}});
  }
  const FilterResult filtered = region_filter(raw, options.filter_threshold, options.filter_per_flow);
  std::vector<bool> kept(names.size(), true);
  for (std::size_t idx : filtered.dropped_regions) {
    kept[idx] = false;
    data.dropped_regions.push_back(idx);
    data.dropped_region_names.push_back(names[idx]);
  }
  std::vector<std::size_t> dense(names.size(), 0);
  for (std::size_t k = 0; k < names.size(); ++k) {
    if (!kept[k]) continue;
    dense[k] = data.region_names.size();
    data.region_names.push_back(names[k]);
  }
  const std::size_t n = data.region_names.size();

  // Grid of surviving cells keyed by time.
  std::map<std::int64_t, std::vector<const Row*>> grid;
  for (const auto& r : rows) {
    const std::size_t p = provisional[r.region];
    if (!kept[p]) continue;
    auto& slot = grid[r.t];
    if (slot.empty()) slot.assign(n, nullptr);
    slot[dense[p]] = &r;
  }

  std::set<std::int64_t> bad_days;
  std::vector<std::string> problems;
  std::int64_t previous = grid.begin()->first;
  for (const auto& [t, cells] : grid) {
    if (t - previous > 1) {
      problems.push_back(fmt::format("hours {}..{} missing", previous + 1, t - 1));
      for (std::int64_t h = previous + 1; h < t; ++h) bad_days.insert(floor_day(h));
    }
    previous = t;
    for (std::size_t i = 0; i < n; ++i) {
      if (cells[i] == nullptr) {
        problems.push_back(fmt::format("t={} has no row for region {}", t, data.region_names[i]));
        bad_days.insert(floor_day(t));
      }
    }
  }
  if (!problems.empty()) {
    const std::string first = problems.front();
    const std::string summary =
        fmt::format("{}: {} timestamp gap(s), first: {}", demand_path, problems.size(), first);
    if (options.gap_policy == GapPolicy::kAbort) throw Error(ErrorCategory::kStructural, summary);
    data.warnings.push_back(summary + fmt::format("; dropped {} incomplete day(s)", bad_days.size()));
    for (auto it = grid.begin(); it != grid.end();) {
      it = bad_days.count(floor_day(it->first)) ? grid.erase(it) : std::next(it);
    }
    if (grid.empty()) {
      throw Error(ErrorCategory::kInvalidInput, demand_path + ": no complete days left after dropping gaps");
    }
  }

  // Lags reach back over the previous rows of the same series. Before six
  // rows exist the oldest available value is repeated; the very first row
  // has no history and gets zero lags.
  std::vector<std::vector<double>> history(n * kFlowCount);
  data.stream.reserve(grid.size() * n * kFlowCount);
  for (const auto& [t, cells] : grid) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < kFlowCount; ++j) {
        auto& h = history[i * kFlowCount + j];
        const double y = j == 0 ? cells[i]->inflow : cells[i]->outflow;
        Observation o{t, i, flow_from_index(j), y, {}};
        for (std::size_t l = 0; l < kLagCount && !h.empty(); ++l) {
          o.lags[l] = h[h.size() - 1 - std::min(l, h.size() - 1)];
        }
        data.stream.push_back(o);
        h.push_back(y);
      }
    }
  }

  if (!forecast_path.empty()) {
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < n; ++i) index[data.region_names[i]] = i;
    data.forecasts = std::make_shared<const ForecastTable>(load_forecast_csv(forecast_path, index));
  }
  return data;
}

void write_demand_csv(const std::filesystem::path& path, std::span<const Observation> stream,
                      const std::vector<std::string>& region_names) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCategory::kIo, "cannot write '" + path.string() + "'");
  auto name = [&](std::size_t i) {
    return i < region_names.size() ? region_names[i] : std::to_string(i);
  };
  std::map<std::pair<std::int64_t, std::size_t>, std::array<double, kFlowCount>> cells;
  for (const auto& o : stream) cells[{o.t, o.region}][flow_index(o.flow)] = o.y;
  out << "t,region,inflow,outflow\n";
  for (const auto& [key, v] : cells) {
    out << fmt::format("{},{},{},{}\n", key.first, name(key.second), v[0], v[1]);
  }
  if (!out) throw Error(ErrorCategory::kIo, "failed writing '" + path.string() + "'");
}

}  // namespace contina
