#include "contina/predictors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <string>

#include "contina/error.hpp"
#include "contina/quantile_engine.hpp"
#include "csv.hpp"

namespace contina {

namespace {

// Pinball loss at quantile level tau.
double pinball(double y, double q, double tau) {
  return y <= q ? (1.0 - tau) * (q - y) : tau * (y - q);
}

// d loss / d q, taking 0 at the kink.
double pinball_slope(double y, double q, double tau) {
  if (y < q) return 1.0 - tau;
  if (y > q) return -tau;
  return 0.0;
}

double rank_quantile(std::vector<double> values, double level) {
  std::sort(values.begin(), values.end());
  return values[quantile_rank(level, values.size()) - 1];
}

std::string cell_name(std::int64_t t, std::size_t region, Flow flow) {
  return "t=" + std::to_string(t) + ", region=" + std::to_string(region) + ", flow=" +
         std::string(to_string(flow));
}

}  // namespace

double pinball_loss_low(double y, double q, double alpha) { return pinball(y, q, alpha / 2.0); }

double pinball_loss_high(double y, double q, double alpha) {
  return pinball(y, q, 1.0 - alpha / 2.0);
}

std::string_view to_string(PredictorKind kind) noexcept {
  switch (kind) {
    case PredictorKind::kSeasonalWindow: return "seasonal_window";
    case PredictorKind::kOnlinePinballLinear: return "online_pinball_linear";
    case PredictorKind::kFileBacked: return "file_backed";
  }
  return "unknown";
}

PredictorKind parse_predictor_kind(std::string_view text) {
  if (text == "seasonal_window") return PredictorKind::kSeasonalWindow;
  if (text == "online_pinball_linear") return PredictorKind::kOnlinePinballLinear;
  if (text == "file_backed") return PredictorKind::kFileBacked;
  throw Error(ErrorCategory::kInvalidArgument, "unknown predictor '" + std::string(text) + "'");
}

// ---------------------------------------------------------------------------
// seasonal_window

SeasonalWindowPredictor::SeasonalWindowPredictor(double alpha, std::size_t window_length,
                                                 ColdStartPolicy cold_start)
    : alpha_(alpha), window_length_(window_length), cold_start_(cold_start) {
  if (window_length == 0) {
    throw Error(ErrorCategory::kInvalidArgument, "seasonal window length must be positive");
  }
}

void SeasonalWindowPredictor::fit(std::span<const Observation> history) {
  for (const auto& obs : history) online_update(obs);
}

QuantileForecast SeasonalWindowPredictor::predict(const Features& x) const {
  const std::deque<double>* source = nullptr;
  if (auto it = buckets_.find({x.region, x.flow, x.hour_of_day()}); it != buckets_.end()) {
    source = &it->second;
  } else if (cold_start_ == ColdStartPolicy::kGlobal) {
    if (auto pooled = pooled_.find({x.region, x.flow}); pooled != pooled_.end()) {
      source = &pooled->second;
    }
  }
  if (source == nullptr) {
    throw Error(ErrorCategory::kMissingData,
                "no history for seasonal bucket (" + cell_name(x.t, x.region, x.flow) + ")");
  }
  std::vector<double> values(source->begin(), source->end());
  return {rank_quantile(values, alpha_ / 2.0), rank_quantile(values, 1.0 - alpha_ / 2.0)};
}

void SeasonalWindowPredictor::online_update(const Observation& obs) {
  auto& bucket = buckets_[{obs.region, obs.flow, obs.features().hour_of_day()}];
  bucket.push_back(obs.y);
  if (bucket.size() > window_length_) bucket.pop_front();

  auto& pool = pooled_[{obs.region, obs.flow}];
  pool.push_back(obs.y);
  if (pool.size() > window_length_ * kHoursPerDay) pool.pop_front();
}

std::size_t SeasonalWindowPredictor::bucket_size(std::size_t region, Flow flow, int hour) const {
  auto it = buckets_.find({region, flow, hour});
  return it == buckets_.end() ? 0 : it->second.size();
}

// ---------------------------------------------------------------------------
// online_pinball_linear

OnlinePinballLinear::OnlinePinballLinear(double alpha, double step, std::size_t epochs)
    : alpha_(alpha), step_(step), epochs_(epochs) {
  if (!(step >= 0.0)) throw Error(ErrorCategory::kInvalidArgument, "linear step must be >= 0");
}

OnlinePinballLinear::Vector OnlinePinballLinear::features(const Model& model, const Features& x) {
  Vector v{};
  for (std::size_t l = 0; l < kLagCount; ++l) v[l] = (x.lags[l] - model.mean) / model.scale;
  const double phase = 2.0 * std::numbers::pi * x.hour_of_day() / static_cast<double>(kHoursPerDay);
  v[kLagCount + 0] = std::sin(phase);
  v[kLagCount + 1] = std::cos(phase);
  v[kLagCount + 2] = std::sin(2.0 * phase);
  v[kLagCount + 3] = std::cos(2.0 * phase);
  return v;
}

namespace {

double head_value(const OnlinePinballLinear::Head& head, const OnlinePinballLinear::Vector& x) {
  double q = head.bias;
  for (std::size_t k = 0; k < x.size(); ++k) q += head.weights[k] * x[k];
  return q;
}

}  // namespace

void OnlinePinballLinear::fit(std::span<const Observation> history) {
  std::map<std::tuple<std::size_t, Flow>, std::vector<const Observation*>> groups;
  for (const auto& obs : history) groups[{obs.region, obs.flow}].push_back(&obs);

  for (auto& [key, rows] : groups) {
    Model& m = models_[key];
    std::vector<double> ys;
    ys.reserve(rows.size());
    double sum = 0.0;
    for (const auto* r : rows) {
      ys.push_back(r->y);
      sum += r->y;
    }
    m.mean = sum / static_cast<double>(ys.size());
    double ss = 0.0;
    for (double y : ys) ss += (y - m.mean) * (y - m.mean);
    const double sd = std::sqrt(ss / static_cast<double>(ys.size()));
    m.scale = sd > 1e-9 ? sd : 1.0;
    m.lo = Head{};
    m.hi = Head{};
    m.lo.bias = rank_quantile(ys, alpha_ / 2.0);
    m.hi.bias = rank_quantile(ys, 1.0 - alpha_ / 2.0);

    for (std::size_t epoch = 0; epoch < epochs_; ++epoch) {
      for (const auto* r : rows) {
        const Vector x = features(m, r->features());
        step_head(m.lo, x, r->y, alpha_ / 2.0, step_ * m.scale);
        step_head(m.hi, x, r->y, 1.0 - alpha_ / 2.0, step_ * m.scale);
      }
    }
  }
}

void OnlinePinballLinear::step_head(Head& head, const Vector& x, double y, double tau,
                                    double step) const {
  const double q = head_value(head, x);
  const double slope = pinball_slope(y, q, tau);
  if (slope == 0.0 || step == 0.0) return;
  double norm2 = 1.0;
  for (double v : x) norm2 += v * v;
  // Shrink the step so the head stops at y instead of jumping past the kink;
  // a repeated observation then never sees its loss go up.
  double scale = step;
  const double dq = -scale * slope * norm2;
  if ((q + dq - y) * (q - y) < 0.0) scale = (y - q) / (-slope * norm2);
  for (std::size_t k = 0; k < x.size(); ++k) head.weights[k] -= scale * slope * x[k];
  head.bias -= scale * slope;
}

QuantileForecast OnlinePinballLinear::predict(const Features& x) const {
  const Model* m = find_model(x.region, x.flow);
  if (m == nullptr) {
    const Model zero{};
    const Vector v = features(zero, x);
    return {head_value(zero.lo, v), head_value(zero.hi, v)};
  }
  const Vector v = features(*m, x);
  return {head_value(m->lo, v), head_value(m->hi, v)};
}

void OnlinePinballLinear::online_update(const Observation& obs) {
  Model& m = model(obs.region, obs.flow);
  const Vector x = features(m, obs.features());
  step_head(m.lo, x, obs.y, alpha_ / 2.0, step_ * m.scale);
  step_head(m.hi, x, obs.y, 1.0 - alpha_ / 2.0, step_ * m.scale);
}

OnlinePinballLinear::Gradient OnlinePinballLinear::gradient(const Observation& obs) const {
  Gradient g;
  const Model zero{};
  const Model* found = find_model(obs.region, obs.flow);
  const Model& m = found != nullptr ? *found : zero;
  const Vector x = features(m, obs.features());
  const double slope_lo = pinball_slope(obs.y, head_value(m.lo, x), alpha_ / 2.0);
  const double slope_hi = pinball_slope(obs.y, head_value(m.hi, x), 1.0 - alpha_ / 2.0);
  for (std::size_t k = 0; k < x.size(); ++k) {
    g.lo.weights[k] = slope_lo * x[k];
    g.hi.weights[k] = slope_hi * x[k];
  }
  g.lo.bias = slope_lo;
  g.hi.bias = slope_hi;
  return g;
}

double OnlinePinballLinear::total_loss(const Observation& obs) const {
  const Model zero{};
  const Model* found = find_model(obs.region, obs.flow);
  const Model& m = found != nullptr ? *found : zero;
  const Vector x = features(m, obs.features());
  return pinball_loss_low(obs.y, head_value(m.lo, x), alpha_) +
         pinball_loss_high(obs.y, head_value(m.hi, x), alpha_);
}

OnlinePinballLinear::Model& OnlinePinballLinear::model(std::size_t region, Flow flow) {
  return models_[{region, flow}];
}

const OnlinePinballLinear::Model* OnlinePinballLinear::find_model(std::size_t region,
                                                                  Flow flow) const {
  auto it = models_.find({region, flow});
  return it == models_.end() ? nullptr : &it->second;
}

// ---------------------------------------------------------------------------
// file_backed

void ForecastTable::insert(const ForecastKey& key, double lo, double hi) {
  if (!rows_.emplace(key, std::pair{lo, hi}).second) {
    throw Error(ErrorCategory::kInvalidInput,
                "duplicate forecast row (" + cell_name(key.t, key.region, key.flow) + ")");
  }
}

const std::pair<double, double>* ForecastTable::find(const ForecastKey& key) const {
  auto it = rows_.find(key);
  return it == rows_.end() ? nullptr : &it->second;
}

ForecastTable load_forecast_csv(const std::string& path,
                                const std::unordered_map<std::string, std::size_t>& region_index) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCategory::kIo, "cannot open forecast file '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) csv::fail(path, 1, "empty file");
  csv::expect_header(line, "t,region,flow,q_lo,q_hi", path);

  ForecastTable table;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = csv::split(line);
    if (f.size() != 5) csv::fail(path, line_no, "expected 5 fields, got " + std::to_string(f.size()));
    const std::int64_t t = csv::to_hour(f[0], path, line_no).t;
    auto region = region_index.find(std::string(f[1]));
    if (region == region_index.end()) continue;
    Flow flow{};
    try {
      flow = parse_flow(f[2]);
    } catch (const Error& e) {
      csv::fail(path, line_no, e.what());
    }
    const double lo = csv::to_double(f[3], path, line_no, "q_lo");
    const double hi = csv::to_double(f[4], path, line_no, "q_hi");
    if (!std::isfinite(lo) || !std::isfinite(hi)) csv::fail(path, line_no, "quantiles must be finite");
    try {
      table.insert({t, region->second, flow}, lo, hi);
    } catch (const Error& e) {
      csv::fail(path, line_no, e.what());
    }
  }
  return table;
}

FileBackedPredictor::FileBackedPredictor(std::shared_ptr<const ForecastTable> table)
    : table_(std::move(table)) {
  if (!table_) throw Error(ErrorCategory::kInvalidArgument, "file-backed predictor needs a forecast table");
}

QuantileForecast FileBackedPredictor::predict(const Features& x) const {
  const auto* row = table_->find({x.t, x.region, x.flow});
  if (row == nullptr) {
    throw Error(ErrorCategory::kMissingData,
                "missing forecast row (" + cell_name(x.t, x.region, x.flow) + ")");
  }
  return {row->first, row->second};
}

std::unique_ptr<QuantilePredictor> make_predictor(const PredictorSpec& spec, double alpha,
                                                  std::shared_ptr<const ForecastTable> table) {
  switch (spec.kind) {
    case PredictorKind::kSeasonalWindow:
      return std::make_unique<SeasonalWindowPredictor>(alpha, spec.window_length, spec.cold_start);
    case PredictorKind::kOnlinePinballLinear:
      return std::make_unique<OnlinePinballLinear>(alpha, spec.step, spec.epochs);
    case PredictorKind::kFileBacked:
      return std::make_unique<FileBackedPredictor>(std::move(table));
  }
  throw Error(ErrorCategory::kInvalidArgument, "unknown predictor kind");
}

}  // namespace contina
