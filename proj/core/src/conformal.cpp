#include "contina/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <utility>

#include "contina/error.hpp"

namespace contina {

QuantileForecast::QuantileForecast(double lo, double hi) : lo_(lo), hi_(hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi)) {
    throw Error(ErrorCategory::kInvalidInput, "quantile forecast must be finite");
  }
  if (lo_ > hi_) {
    std::swap(lo_, hi_);
    crossed_ = true;
  }
}

PredictionInterval PredictionInterval::band(double low, double up) {
  if (!(low <= up)) {
    throw Error(ErrorCategory::kInvalidArgument, "interval band requires low <= up");
  }
  return PredictionInterval(low, up);
}

double conformity_score(double y, const QuantileForecast& forecast) {
  return std::max(y - forecast.hi(), forecast.lo() - y);
}

double absolute_residual(double y, double point) { return std::abs(y - point); }

PredictionInterval build_interval_qcp(const QuantileForecast& forecast, const QuantileResult& q) {
  if (q.is_empty()) return PredictionInterval::empty();
  const double w = q.widening();
  const double low = forecast.lo() - w;
  const double up = forecast.hi() + w;
  // A widening below -(hi - lo)/2 crosses the endpoints; nothing can be inside.
  if (low > up) return PredictionInterval::empty();
  return PredictionInterval::band(low, up);
}

PredictionInterval build_interval_cp(double point, const QuantileResult& q) {
  if (q.is_empty()) return PredictionInterval::empty();
  const double w = q.widening();
  if (w < 0.0) return PredictionInterval::empty();
  return PredictionInterval::band(point - w, point + w);
}

bool contains(const PredictionInterval& interval, double y) {
  if (interval.is_empty()) return false;
  return interval.low() <= y && y <= interval.up();
}

IntervalLength interval_length(const PredictionInterval& interval) {
  if (interval.is_empty()) return {0.0, true};
  return {interval.up() - interval.low(), false};
}

PredictionInterval clamp_nonnegative(const PredictionInterval& interval) {
  if (interval.is_empty()) return interval;
  const double low = std::max(interval.low(), 0.0);
  if (low > interval.up()) return PredictionInterval::empty();
  return PredictionInterval::band(low, interval.up());
}

}  // namespace contina
