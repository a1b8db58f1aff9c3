#pragma once

#include <cstddef>
#include <deque>
#include <vector>

namespace contina {

// Bounded FIFO multiset of conformity scores for one (region, flow) pair.
//
// Alongside the arrival-order queue the window keeps a sorted copy, so rank
// queries are O(1) and a push costs one binary search plus a shift of at most
// `capacity` doubles.
class CalibrationWindow {
 public:
  explicit CalibrationWindow(std::size_t capacity);

  // Appends `score`; evicts the oldest score when already at capacity.
  // Throws Error(kInvalidInput) for NaN or infinite scores.
  void push(double score);

  std::size_t size() const noexcept { return fifo_.size(); }
  std::size_t capacity() const noexcept { return capacity_; }
  bool empty() const noexcept { return fifo_.empty(); }

  // m-th smallest stored score, 1-based. Requires 1 <= m <= size().
  double nth_smallest(std::size_t m) const;
  double max() const;

  // Scores in arrival order, oldest first.
  std::vector<double> scores() const { return {fifo_.begin(), fifo_.end()}; }
  const std::vector<double>& sorted() const noexcept { return sorted_; }

 private:
  std::size_t capacity_;
  std::deque<double> fifo_;
  std::vector<double> sorted_;
};

class QuantileResult {
 public:
  enum class Kind { kValue, kEmpty, kInflated };

  static QuantileResult value(double v) { return {Kind::kValue, v}; }
  static QuantileResult inflated(double v) { return {Kind::kInflated, v}; }
  static QuantileResult empty() { return {Kind::kEmpty, 0.0}; }

  Kind kind() const noexcept { return kind_; }
  bool is_empty() const noexcept { return kind_ == Kind::kEmpty; }
  // Widening amount for kValue / kInflated. Throws for kEmpty.
  double widening() const;

  friend bool operator==(const QuantileResult&, const QuantileResult&) = default;

 private:
  QuantileResult(Kind kind, double v) : kind_(kind), value_(v) {}

  Kind kind_;
  double value_;
};

// Rank used for a level in [0, 1] over n scores: clamp(ceil(level * n), 1, n).
// A relative slack of 1e-12 absorbs products such as 0.07 * 100 that land a
// hair above an integer.
std::size_t quantile_rank(double level, std::size_t n);

// m-th smallest score with m = quantile_rank(level, size).
// Throws kEmptyCalibration on an empty window and kInvalidArgument when the
// level is outside [0, 1].
double empirical_quantile(const CalibrationWindow& window, double level);

// Extends empirical_quantile to any real level: above 1 the quantile is
// replaced by twice the window maximum, below 0 the interval is empty.
QuantileResult quantile_with_rules(const CalibrationWindow& window, double level);

}  // namespace contina
