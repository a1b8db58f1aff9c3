#include "contina/quantile_engine.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "contina/error.hpp"

namespace contina {

CalibrationWindow::CalibrationWindow(std::size_t capacity) : capacity_(capacity) {
  if (capacity == 0) {
    throw Error(ErrorCategory::kInvalidArgument, "calibration window capacity must be positive");
  }
  sorted_.reserve(capacity);
}

void CalibrationWindow::push(double score) {
  if (!std::isfinite(score)) {
    throw Error(ErrorCategory::kInvalidInput, "conformity score must be finite");
  }
  if (fifo_.size() == capacity_) {
    const double oldest = fifo_.front();
    fifo_.pop_front();
    // Any element equal to `oldest` is interchangeable in the multiset.
    sorted_.erase(std::lower_bound(sorted_.begin(), sorted_.end(), oldest));
  }
  fifo_.push_back(score);
  sorted_.insert(std::upper_bound(sorted_.begin(), sorted_.end(), score), score);
}

double CalibrationWindow::nth_smallest(std::size_t m) const {
  if (empty()) {
    throw Error(ErrorCategory::kEmptyCalibration, "quantile of an empty calibration window");
  }
  if (m < 1 || m > sorted_.size()) {
    throw Error(ErrorCategory::kInvalidArgument,
                "rank " + std::to_string(m) + " outside window of size " +
                    std::to_string(sorted_.size()));
  }
  return sorted_[m - 1];
}

double CalibrationWindow::max() const {
  if (empty()) {
    throw Error(ErrorCategory::kEmptyCalibration, "maximum of an empty calibration window");
  }
  return sorted_.back();
}

double QuantileResult::widening() const {
  if (kind_ == Kind::kEmpty) {
    throw Error(ErrorCategory::kInvalidArgument, "empty quantile result carries no value");
  }
  return value_;
}

std::size_t quantile_rank(double level, std::size_t n) {
  const double target = level * static_cast<double>(n);
  const double m = std::ceil(target - 1e-12 * std::max(1.0, std::abs(target)));
  if (m < 1.0) return 1;
  if (m > static_cast<double>(n)) return n;
  return static_cast<std::size_t>(m);
}

double empirical_quantile(const CalibrationWindow& window, double level) {
  if (window.empty()) {
    throw Error(ErrorCategory::kEmptyCalibration, "quantile of an empty calibration window");
  }
  if (!(level >= 0.0 && level <= 1.0)) {
    throw Error(ErrorCategory::kInvalidArgument,
                "quantile level outside [0, 1]; use quantile_with_rules");
  }
  return window.nth_smallest(quantile_rank(level, window.size()));
}

QuantileResult quantile_with_rules(const CalibrationWindow& window, double level) {
  if (window.empty()) {
    throw Error(ErrorCategory::kEmptyCalibration, "quantile of an empty calibration window");
  }
  if (std::isnan(level)) {
    throw Error(ErrorCategory::kInvalidArgument, "quantile level is NaN");
  }
  if (level > 1.0) {
    // Stand-in for +infinity. A negative maximum would shrink under doubling,
    // so the maximum itself is used there to keep the result above every score.
    const double top = window.max();
    return QuantileResult::inflated(top >= 0.0 ? 2.0 * top : top);
  }
  if (level < 0.0) return QuantileResult::empty();
  return QuantileResult::value(empirical_quantile(window, level));
}

}  // namespace contina
