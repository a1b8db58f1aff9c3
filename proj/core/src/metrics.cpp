#include "contina/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "contina/error.hpp"

namespace contina {

namespace {

[[noreturn]] void structural(const std::string& what) {
  throw Error(ErrorCategory::kStructural, what);
}

std::string cell(std::int64_t t, std::size_t region) {
  return "(t=" + std::to_string(t) + ", region=" + std::to_string(region) + ")";
}

// Records laid out densely by (t, region, flow) so every reduction runs in
// the same order whatever order the ledger was filled in.
struct Dense {
  std::size_t n = 0;
  std::size_t horizon = 0;
  std::vector<const CellRecord*> cells;

  const CellRecord& at(std::size_t t, std::size_t region, std::size_t flow) const {
    return *cells[(t * n + region) * kFlowCount + flow];
  }
};

Dense densify(const RunLedger& ledger) {
  Dense d;
  d.n = ledger.n_regions();
  d.horizon = ledger.horizon();
  d.cells.assign(d.n * d.horizon * kFlowCount, nullptr);
  for (const auto& r : ledger.records()) {
    if (r.t < 0 || static_cast<std::size_t>(r.t) >= d.horizon || r.region >= d.n) {
      structural("ledger record outside the run " + cell(r.t, r.region));
    }
    if (r.length < 0.0 || !std::isfinite(r.length)) {
      structural("ledger record with invalid length " + cell(r.t, r.region));
    }
    auto& slot = d.cells[(static_cast<std::size_t>(r.t) * d.n + r.region) * kFlowCount +
                         flow_index(r.flow)];
    if (slot != nullptr) {
      structural("duplicate ledger record " + cell(r.t, r.region) + " flow " +
                 std::string(to_string(r.flow)));
    }
    slot = &r;
  }
  for (std::size_t t = 0; t < d.horizon; ++t) {
    for (std::size_t i = 0; i < d.n; ++i) {
      for (std::size_t j = 0; j < kFlowCount; ++j) {
        if (d.cells[(t * d.n + i) * kFlowCount + j] == nullptr) {
          structural("incomplete ledger: missing " + cell(static_cast<std::int64_t>(t), i));
        }
      }
    }
  }
  return d;
}

struct Tally {
  std::vector<std::size_t> covered_by_region;
  std::size_t covered = 0;
  std::size_t empty = 0;
  double length_sum = 0.0;
  std::size_t steps = 0;
};

Tally tally(const Dense& d, std::size_t begin, std::size_t end) {
  Tally out;
  out.covered_by_region.assign(d.n, 0);
  out.steps = end - begin;
  for (std::size_t t = begin; t < end; ++t) {
    for (std::size_t i = 0; i < d.n; ++i) {
      for (std::size_t j = 0; j < kFlowCount; ++j) {
        const auto& r = d.at(t, i, j);
        if (r.covered) {
          ++out.covered;
          ++out.covered_by_region[i];
        }
        if (r.empty) ++out.empty;
        out.length_sum += r.length;
      }
    }
  }
  return out;
}

RegionalMinimum minimum_of(const Tally& t) {
  RegionalMinimum best{2.0, 0};
  const double cells = static_cast<double>(kFlowCount * t.steps);
  for (std::size_t i = 0; i < t.covered_by_region.size(); ++i) {
    const double c = static_cast<double>(t.covered_by_region[i]) / cells;
    if (c < best.value) best = {c, i};
  }
  return best;
}

std::size_t total_cells(const Dense& d) { return d.n * d.horizon * kFlowCount; }

}  // namespace

RunLedger::RunLedger(std::size_t n_regions, std::size_t horizon)
    : n_regions_(n_regions), horizon_(horizon) {
  if (n_regions == 0 || horizon == 0) {
    throw Error(ErrorCategory::kInvalidArgument, "ledger needs at least one region and one step");
  }
}

void RunLedger::check_complete() const { densify(*this); }

double average_coverage(const RunLedger& ledger) {
  const Dense d = densify(ledger);
  return static_cast<double>(tally(d, 0, d.horizon).covered) / static_cast<double>(total_cells(d));
}

RegionalMinimum min_regional_coverage(const RunLedger& ledger) {
  const Dense d = densify(ledger);
  return minimum_of(tally(d, 0, d.horizon));
}

double mean_length(const RunLedger& ledger) {
  const Dense d = densify(ledger);
  return tally(d, 0, d.horizon).length_sum / static_cast<double>(total_cells(d));
}

double empty_rate(const RunLedger& ledger) {
  const Dense d = densify(ledger);
  return static_cast<double>(tally(d, 0, d.horizon).empty) / static_cast<double>(total_cells(d));
}

std::vector<double> regional_coverages(const RunLedger& ledger) {
  const Dense d = densify(ledger);
  const Tally t = tally(d, 0, d.horizon);
  std::vector<double> out(d.n);
  for (std::size_t i = 0; i < d.n; ++i) {
    out[i] = static_cast<double>(t.covered_by_region[i]) / static_cast<double>(kFlowCount * d.horizon);
  }
  return out;
}

PeriodSummary summarize_period(const RunLedger& ledger, std::int64_t begin, std::int64_t end) {
  const Dense d = densify(ledger);
  if (begin < 0 || end <= begin || static_cast<std::size_t>(end) > d.horizon) {
    throw Error(ErrorCategory::kInvalidArgument, "period [" + std::to_string(begin) + ", " +
                                                     std::to_string(end) + ") outside the run");
  }
  const Tally t = tally(d, static_cast<std::size_t>(begin), static_cast<std::size_t>(end));
  const double cells = static_cast<double>(d.n * t.steps * kFlowCount);
  PeriodSummary s;
  s.begin = begin;
  s.end = end;
  s.coverage = static_cast<double>(t.covered) / cells;
  s.min_regional = minimum_of(t);
  s.length = t.length_sum / cells;
  s.empty_rate = static_cast<double>(t.empty) / cells;
  return s;
}

DailyStats daily_regional_stats(const RunLedger& ledger, std::int64_t steps_per_day) {
  if (steps_per_day <= 0) {
    throw Error(ErrorCategory::kInvalidArgument, "steps_per_day must be positive");
  }
  const Dense d = densify(ledger);
  const auto per_day = static_cast<std::size_t>(steps_per_day);
  DailyStats out;
  const std::size_t whole_days = d.horizon / per_day;
  out.partial_day_dropped = d.horizon % per_day != 0;
  for (std::size_t day = 0; day < whole_days; ++day) {
    const Tally t = tally(d, day * per_day, (day + 1) * per_day);
    std::vector<double> cov(d.n);
    double sum = 0.0;
    for (std::size_t i = 0; i < d.n; ++i) {
      cov[i] = static_cast<double>(t.covered_by_region[i]) / static_cast<double>(kFlowCount * per_day);
      sum += cov[i];
    }
    const double mean = sum / static_cast<double>(d.n);
    double ss = 0.0;
    for (double c : cov) ss += (c - mean) * (c - mean);
    out.days.push_back({static_cast<std::int64_t>(day), mean, std::sqrt(ss / static_cast<double>(d.n))});
  }
  return out;
}

std::vector<DayRegionCount> daily_region_counts(const RunLedger& ledger,
                                                std::int64_t steps_per_day) {
  if (steps_per_day <= 0) {
    throw Error(ErrorCategory::kInvalidArgument, "steps_per_day must be positive");
  }
  const Dense d = densify(ledger);
  const auto per_day = static_cast<std::size_t>(steps_per_day);
  std::vector<DayRegionCount> out;
  for (std::size_t begin = 0, day = 0; begin < d.horizon; begin += per_day, ++day) {
    const std::size_t end = std::min(begin + per_day, d.horizon);
    for (std::size_t i = 0; i < d.n; ++i) {
      DayRegionCount c;
      c.day = static_cast<std::int64_t>(day);
      c.region = i;
      c.partial = end - begin < per_day;
      for (std::size_t t = begin; t < end; ++t) {
        for (std::size_t j = 0; j < kFlowCount; ++j) {
          const auto& r = d.at(t, i, j);
          ++c.cells;
          if (r.covered) ++c.covered;
          if (r.empty) ++c.empty;
          c.length_sum += r.length;
        }
      }
      out.push_back(c);
    }
  }
  return out;
}

Theorem1Constant theorem1_constant(const AdaptHyperParams& hp) {
  hp.validate();
  const LemmaBounds lb = lemma_bounds(hp);
  const double envelope = hp.target_alpha * std::sqrt((1.0 - hp.beta) * lb.k) + hp.epsilon;
  return {1.0 / hp.gamma1 + 2.0 / envelope, lb.degenerate};
}

void BoundParams::validate() const {
  if (!(c1 > 0.0) || !(c2 > 0.0) || dependence_window < 1 || n_regions < 1 || horizon < 1) {
    throw Error(ErrorCategory::kInvalidArgument, "bound parameters must all be positive");
  }
}

Theorem2Bound theorem2_bound(const BoundParams& bp, double alpha) {
  bp.validate();
  const double T = static_cast<double>(bp.horizon);
  Theorem2Bound out;
  double log_n = 0.0;
  if (bp.n_regions < 2) {
    out.log_term_zeroed = true;
  } else {
    log_n = std::log(static_cast<double>(bp.n_regions));
  }
  out.bound = 1.0 - alpha - bp.c1 / T -
              std::sqrt(bp.c2 * static_cast<double>(bp.dependence_window) * log_n / T);
  return out;
}

}  // namespace contina
