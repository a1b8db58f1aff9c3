#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <tuple>
#include <unordered_map>
#include <vector>

#include "contina/conformal.hpp"
#include "contina/observation.hpp"

namespace contina {

// Quantile losses for the lower (alpha/2) and upper (1 - alpha/2) heads.
double pinball_loss_low(double y, double q, double alpha);
double pinball_loss_high(double y, double q, double alpha);

// Base model contract: fit on history, forecast one cell, optionally learn
// from each revealed observation.
class QuantilePredictor {
 public:
  virtual ~QuantilePredictor() = default;

  virtual void fit(std::span<const Observation> history) = 0;
  virtual QuantileForecast predict(const Features& x) const = 0;
  virtual void online_update(const Observation& obs) = 0;
  virtual std::string_view name() const noexcept = 0;
};

enum class PredictorKind { kSeasonalWindow, kOnlinePinballLinear, kFileBacked };

std::string_view to_string(PredictorKind kind) noexcept;
PredictorKind parse_predictor_kind(std::string_view text);

enum class ColdStartPolicy { kGlobal, kError };

struct PredictorSpec {
  PredictorKind kind = PredictorKind::kOnlinePinballLinear;
  // seasonal_window: observations kept per (region, flow, hour) bucket.
  std::size_t window_length = 28;
  ColdStartPolicy cold_start = ColdStartPolicy::kGlobal;
  // online_pinball_linear: subgradient step in target standard deviations,
  // and passes over the training segment.
  double step = 0.01;
  std::size_t epochs = 3;
  // file_backed: forecast CSV path (loaded by the harness).
  std::string forecast_path;
};

// Empirical quantiles of the same (region, flow, hour-of-day) bucket.
class SeasonalWindowPredictor final : public QuantilePredictor {
 public:
  SeasonalWindowPredictor(double alpha, std::size_t window_length,
                          ColdStartPolicy cold_start = ColdStartPolicy::kGlobal);

  void fit(std::span<const Observation> history) override;
  QuantileForecast predict(const Features& x) const override;
  void online_update(const Observation& obs) override;
  std::string_view name() const noexcept override { return "seasonal_window"; }

  std::size_t bucket_size(std::size_t region, Flow flow, int hour) const;

 private:
  using Key = std::tuple<std::size_t, Flow, int>;
  using PoolKey = std::tuple<std::size_t, Flow>;

  double alpha_;
  std::size_t window_length_;
  ColdStartPolicy cold_start_;
  std::map<Key, std::deque<double>> buckets_;
  std::map<PoolKey, std::deque<double>> pooled_;
};

// Two linear quantile heads per (region, flow) on z-scored lags plus
// hour-of-day harmonics, trained by pinball-loss subgradient steps.
class OnlinePinballLinear final : public QuantilePredictor {
 public:
  static constexpr std::size_t kHarmonics = 4;
  static constexpr std::size_t kFeatureCount = kLagCount + kHarmonics;
  using Vector = std::array<double, kFeatureCount>;

  struct Head {
    Vector weights{};
    double bias = 0.0;
  };

  struct Model {
    Head lo;
    Head hi;
    // z-score parameters for the lag features, target sd scales the step.
    double mean = 0.0;
    double scale = 1.0;
  };

  struct Gradient {
    Head lo;
    Head hi;
  };

  OnlinePinballLinear(double alpha, double step, std::size_t epochs);

  void fit(std::span<const Observation> history) override;
  QuantileForecast predict(const Features& x) const override;
  void online_update(const Observation& obs) override;
  std::string_view name() const noexcept override { return "online_pinball_linear"; }

  // Feature vector of `x` under `model`'s normalization.
  static Vector features(const Model& model, const Features& x);
  // Subgradient of pinball_loss_low + pinball_loss_high w.r.t. every weight
  // and bias, in original units.
  Gradient gradient(const Observation& obs) const;
  double total_loss(const Observation& obs) const;

  // Untrained (region, flow) pairs start from an all-zero model.
  Model& model(std::size_t region, Flow flow);
  const Model* find_model(std::size_t region, Flow flow) const;

 private:
  void step_head(Head& head, const Vector& x, double y, double head_alpha, double step) const;

  double alpha_;
  double step_;
  std::size_t epochs_;
  std::map<std::tuple<std::size_t, Flow>, Model> models_;
};

struct ForecastKey {
  std::int64_t t = 0;
  std::size_t region = 0;
  Flow flow = Flow::kIn;
  friend auto operator<=>(const ForecastKey&, const ForecastKey&) = default;
};

// Externally computed quantile pairs keyed by cell.
class ForecastTable {
 public:
  // Throws Error(kInvalidInput) on a duplicate cell.
  void insert(const ForecastKey& key, double lo, double hi);
  const std::pair<double, double>* find(const ForecastKey& key) const;
  std::size_t size() const noexcept { return rows_.size(); }

 private:
  std::map<ForecastKey, std::pair<double, double>> rows_;
};

// Reads `t,region,flow,q_lo,q_hi`. Region names are resolved through
// `region_index`; rows for unknown regions are skipped (they were filtered).
ForecastTable load_forecast_csv(const std::string& path,
                                const std::unordered_map<std::string, std::size_t>& region_index);

class FileBackedPredictor final : public QuantilePredictor {
 public:
  explicit FileBackedPredictor(std::shared_ptr<const ForecastTable> table);

  void fit(std::span<const Observation>) override {}
  // Throws Error(kMissingData) naming (t, region, flow) for an absent row.
  QuantileForecast predict(const Features& x) const override;
  void online_update(const Observation&) override {}
  std::string_view name() const noexcept override { return "file_backed"; }

 private:
  std::shared_ptr<const ForecastTable> table_;
};

std::unique_ptr<QuantilePredictor> make_predictor(const PredictorSpec& spec, double alpha,
                                                  std::shared_ptr<const ForecastTable> table = {});

}  // namespace contina
