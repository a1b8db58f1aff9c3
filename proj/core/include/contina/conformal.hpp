#pragma once

#include "contina/quantile_engine.hpp"

namespace contina {

// Lower/upper quantile pair from a base predictor. Construction swaps a
// crossed pair and remembers that it did.
class QuantileForecast {
 public:
  QuantileForecast(double lo, double hi);

  double lo() const noexcept { return lo_; }
  double hi() const noexcept { return hi_; }
  bool was_crossed() const noexcept { return crossed_; }
  double midpoint() const noexcept { return 0.5 * (lo_ + hi_); }

 private:
  double lo_;
  double hi_;
  bool crossed_ = false;
};

class PredictionInterval {
 public:
  static PredictionInterval band(double low, double up);
  static PredictionInterval empty() { return PredictionInterval(); }

  bool is_empty() const noexcept { return empty_; }
  // Endpoints; both are 0 for the empty interval.
  double low() const noexcept { return low_; }
  double up() const noexcept { return up_; }

  friend bool operator==(const PredictionInterval&, const PredictionInterval&) = default;

 private:
  PredictionInterval() = default;
  PredictionInterval(double low, double up) : empty_(false), low_(low), up_(up) {}

  bool empty_ = true;
  double low_ = 0.0;
  double up_ = 0.0;
};

struct IntervalLength {
  double length = 0.0;
  bool empty = false;
};

// max{y - hi, lo - y}: negative exactly when y lies strictly inside (lo, hi).
double conformity_score(double y, const QuantileForecast& forecast);

// Absolute residual |y - point|, the score behind the symmetric CP baseline.
double absolute_residual(double y, double point);

// [lo - q, hi + q], or the empty interval when q is Empty.
PredictionInterval build_interval_qcp(const QuantileForecast& forecast, const QuantileResult& q);

// [point - q, point + q], or the empty interval when q is Empty.
PredictionInterval build_interval_cp(double point, const QuantileResult& q);

// Closed-interval membership; nothing is contained in the empty interval.
bool contains(const PredictionInterval& interval, double y);

// up - low for a band, 0 with the empty flag set otherwise.
IntervalLength interval_length(const PredictionInterval& interval);

// Raises the lower endpoint to 0 for nonnegative quantities. Empty stays empty.
PredictionInterval clamp_nonnegative(const PredictionInterval& interval);

}  // namespace contina
