#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "contina/adaptation.hpp"
#include "contina/observation.hpp"

namespace contina {

// Outcome of one (step, region, flow) cell. `t` is the deployment step index
// in [0, horizon).
struct CellRecord {
  std::int64_t t = 0;
  std::size_t region = 0;
  Flow flow = Flow::kIn;
  bool covered = false;
  double length = 0.0;
  bool empty = false;
};

class RunLedger {
 public:
  RunLedger(std::size_t n_regions, std::size_t horizon);

  void add(const CellRecord& record) { records_.push_back(record); }
  void reserve(std::size_t n) { records_.reserve(n); }

  const std::vector<CellRecord>& records() const noexcept { return records_; }
  std::vector<CellRecord>& records() noexcept { return records_; }
  std::size_t n_regions() const noexcept { return n_regions_; }
  std::size_t horizon() const noexcept { return horizon_; }

  // Throws Error(kStructural) naming the first out-of-range, duplicated or
  // missing (t, region) cell.
  void check_complete() const;

 private:
  std::size_t n_regions_;
  std::size_t horizon_;
  std::vector<CellRecord> records_;
};

double average_coverage(const RunLedger& ledger);

struct RegionalMinimum {
  double value = 0.0;
  std::size_t region = 0;  // smallest index among ties
};
RegionalMinimum min_regional_coverage(const RunLedger& ledger);

double mean_length(const RunLedger& ledger);

// Fraction of cells whose interval was the empty set.
double empty_rate(const RunLedger& ledger);

// Coverage of each region over the whole horizon, indexed by region.
std::vector<double> regional_coverages(const RunLedger& ledger);

// Aggregates over the half-open step range [begin, end).
struct PeriodSummary {
  std::int64_t begin = 0;
  std::int64_t end = 0;
  double coverage = 0.0;
  RegionalMinimum min_regional;
  double length = 0.0;
  double empty_rate = 0.0;
};
PeriodSummary summarize_period(const RunLedger& ledger, std::int64_t begin, std::int64_t end);

struct DayStat {
  std::int64_t day = 0;
  double mean_coverage = 0.0;
  double std_coverage = 0.0;  // population standard deviation over regions
};

struct DailyStats {
  std::vector<DayStat> days;
  bool partial_day_dropped = false;
};

// Per-day mean and spread of regional coverage. A trailing partial day is
// dropped and flagged. Throws kInvalidArgument for steps_per_day <= 0.
DailyStats daily_regional_stats(const RunLedger& ledger, std::int64_t steps_per_day);

struct DayRegionCount {
  std::int64_t day = 0;
  std::size_t region = 0;
  std::size_t covered = 0;
  std::size_t cells = 0;
  std::size_t empty = 0;
  double length_sum = 0.0;
  bool partial = false;
};

// Raw per-(day, region) tallies, including a trailing partial day.
std::vector<DayRegionCount> daily_region_counts(const RunLedger& ledger,
                                                std::int64_t steps_per_day);

struct Theorem1Constant {
  double c = 0.0;
  bool degenerate = false;  // target 0.5 makes k vanish
};

// c = 1/gamma1 + 2 / (alpha * sqrt((1 - beta) * k) + epsilon): the average
// coverage stays within c / T of the target.
Theorem1Constant theorem1_constant(const AdaptHyperParams& hp);

struct BoundParams {
  double c1 = 0.0;
  double c2 = 0.25;
  std::size_t dependence_window = 1;  // K
  std::size_t n_regions = 1;
  std::size_t horizon = 1;  // T

  void validate() const;
};

struct Theorem2Bound {
  double bound = 0.0;
  bool log_term_zeroed = false;  // fewer than two regions
};

// Floor on the worst regional coverage:
// 1 - alpha - c1 / T - sqrt(c2 * K * log(n) / T).
Theorem2Bound theorem2_bound(const BoundParams& bp, double alpha);

}  // namespace contina
