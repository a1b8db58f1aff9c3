#include <algorithm>
#include <exception>
#include <string>
#include <thread>

#include <fmt/format.h>

#include "contina/error.hpp"
#include "contina/harness.hpp"

namespace contina {

namespace {

bool is_adaptive(Method m) { return m == Method::kAciFixed || m == Method::kContina; }

struct RegionInputs {
  std::vector<Observation> train;
  std::vector<Observation> calibration;
};

// Everything one region's worker produces; merged in region order.
struct RegionOutput {
  RegionAdaptState initial;
  RegionAdaptState final;
  double rate_weighted_error = 0.0;
  std::vector<double> trajectory;
  RunDiagnostics diagnostics;
  std::optional<AuditRecord> audit;
};

struct AuditTarget {
  std::size_t region;
  std::size_t step;
  Flow flow;
};

PredictionInterval make_interval(Method method, const QuantileForecast& f, const QuantileResult& q,
                                 bool clamp) {
  PredictionInterval interval =
      method == Method::kCp ? build_interval_cp(f.midpoint(), q) : build_interval_qcp(f, q);
  return clamp ? clamp_nonnegative(interval) : interval;
}

double score_of(Method method, double y, const QuantileForecast& f) {
  return method == Method::kCp ? absolute_residual(y, f.midpoint()) : conformity_score(y, f);
}

QuantileForecast predict_cell(const QuantilePredictor& predictor, const Features& x,
                              const std::vector<std::string>& names) {
  try {
    return predictor.predict(x);
  } catch (const Error& e) {
    if (e.category() != ErrorCategory::kMissingData) throw;
    throw Error(ErrorCategory::kMissingData,
                fmt::format("{} [region name '{}']", e.what(), names.at(x.region)));
  }
}

}  // namespace

RunResult run_replay(const ExperimentConfig& config) { return run_replay(config, load_dataset(config)); }

RunResult run_replay(const ExperimentConfig& config, const Dataset& data) {
  config.validate();
  const std::size_t n = data.region_names.size();
  if (n == 0) throw Error(ErrorCategory::kInvalidInput, "dataset has no regions");
  const StreamSplit parts = split(data.stream, config.train_frac, config.calib_frac);
  const std::size_t horizon = parts.deployment_steps;

  std::vector<RegionInputs> inputs(n);
  for (const auto& o : parts.train) inputs.at(o.region).train.push_back(o);
  for (const auto& o : parts.calibration) inputs.at(o.region).calibration.push_back(o);

  // Deployment cells laid out by (step, region, flow).
  std::vector<const Observation*> grid(horizon * n * kFlowCount, nullptr);
  std::vector<std::int64_t> step_times;
  step_times.reserve(horizon);
  for (const auto& o : parts.deployment) {
    if (step_times.empty() || step_times.back() != o.t) step_times.push_back(o.t);
    const std::size_t s = step_times.size() - 1;
    auto& slot = grid[(s * n + o.region) * kFlowCount + flow_index(o.flow)];
    if (slot != nullptr) {
      throw Error(ErrorCategory::kStructural,
                  fmt::format("duplicate deployment cell (t={}, region={})", o.t, data.region_names[o.region]));
    }
    slot = &o;
  }
  for (std::size_t k = 0; k < grid.size(); ++k) {
    if (grid[k] == nullptr) {
      const std::size_t s = k / (n * kFlowCount);
      const std::size_t i = (k / kFlowCount) % n;
      throw Error(ErrorCategory::kStructural,
                  fmt::format("deployment step {} lacks a cell for region {}", s, data.region_names[i]));
    }
  }

  const std::size_t capacity = config.window > 0 ? config.window : parts.calibration_steps;
  const AdaptHyperParams& hp = config.hp;
  const Method method = config.method;
  const bool adapt = is_adaptive(method);
  const bool slide = adapt || config.slide_static_windows;

  std::optional<AuditTarget> audit_target;
  if (config.audit) {
    audit_target = AuditTarget{derive_seed(config.seed, 0xA0D1) % n, derive_seed(config.seed, 0xA0D2) % horizon,
                               flow_from_index(derive_seed(config.seed, 0xA0D3) % kFlowCount)};
  }

  RunResult result;
  result.ledger = RunLedger(n, horizon);
  result.ledger.records().resize(horizon * n * kFlowCount);
  std::vector<RegionOutput> outputs(n);

  auto run_region = [&](std::size_t i) {
    RegionOutput& out = outputs[i];
    auto predictor = make_predictor(config.predictor, hp.target_alpha, data.forecasts);
    predictor->fit(inputs[i].train);

    std::vector<CalibrationWindow> windows(kFlowCount, CalibrationWindow(capacity));
    for (const auto& o : inputs[i].calibration) {
      const QuantileForecast f = predict_cell(*predictor, o.features(), data.region_names);
      windows[flow_index(o.flow)].push(score_of(method, o.y, f));
      if (config.online_predictor) predictor->online_update(o);
    }
    for (std::size_t j = 0; j < kFlowCount; ++j) {
      if (windows[j].empty()) {
        throw Error(ErrorCategory::kEmptyCalibration,
                    fmt::format("no calibration scores for region {} flow {}", data.region_names[i],
                                to_string(flow_from_index(j))));
      }
    }

    RegionAdaptState state = RegionAdaptState::initial(i, hp);
    out.initial = state;
    if (config.record_trajectories) out.trajectory.reserve(horizon + 1);

    for (std::size_t s = 0; s < horizon; ++s) {
      if (config.record_trajectories) out.trajectory.push_back(state.alpha);
      const double level = 1.0 - (adapt ? state.alpha : hp.target_alpha);
      bool hit[kFlowCount] = {false, false};
      for (std::size_t j = 0; j < kFlowCount; ++j) {
        const Observation& o = *grid[(s * n + i) * kFlowCount + j];
        const Features x = o.features();
        const QuantileForecast f = predict_cell(*predictor, x, data.region_names);
        if (f.was_crossed()) ++out.diagnostics.crossed_forecasts;
        const QuantileResult q = quantile_with_rules(windows[j], level);
        if (q.kind() == QuantileResult::Kind::kInflated) ++out.diagnostics.inflated_quantiles;
        const PredictionInterval interval = make_interval(method, f, q, config.clamp_nonnegative);
        if (audit_target && audit_target->region == i && audit_target->step == s &&
            audit_target->flow == o.flow) {
          out.audit = AuditRecord{i,         static_cast<std::int64_t>(s), o.flow, x, windows[j].scores(),
                                  capacity,  state.alpha,                  f.lo(),  f.hi(), interval};
        }

        // The realized demand is consulted only from here on.
        hit[j] = contains(interval, o.y);
        const IntervalLength len = interval_length(interval);
        if (len.empty) ++out.diagnostics.empty_intervals;
        result.ledger.records()[(s * n + i) * kFlowCount + j] =
            CellRecord{static_cast<std::int64_t>(s), i, o.flow, hit[j], len.length, len.empty};
        if (slide) windows[j].push(score_of(method, o.y, f));
        if (config.online_predictor) predictor->online_update(o);
      }

      const double err = coverage_error(hit[0], hit[1]);
      if (method == Method::kAciFixed) {
        out.rate_weighted_error += config.aci_gamma * (hp.target_alpha - err);
        state = update_alpha_fixed(state, err, config.aci_gamma, hp);
      } else if (method == Method::kContina) {
        state = update_alpha_adaptive(state, err, hp);
        out.rate_weighted_error += adaptive_rate(state.moment, hp) * (hp.target_alpha - err);
      }
    }
    if (config.record_trajectories) out.trajectory.push_back(state.alpha);
    out.final = state;
  };

  std::vector<std::exception_ptr> failures(n);
  auto guarded = [&](std::size_t i) {
    try {
      run_region(i);
    } catch (...) {
      failures[i] = std::current_exception();
    }
  };
  const std::size_t workers = std::clamp<std::size_t>(config.threads, 1, n);
  if (workers == 1) {
    for (std::size_t i = 0; i < n; ++i) guarded(i);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < n; i += workers) guarded(i);
      });
    }
  }
  for (const auto& f : failures) {
    if (f) std::rethrow_exception(f);
  }

  for (auto& out : outputs) {
    result.initial_states.push_back(out.initial);
    result.final_states.push_back(out.final);
    result.rate_weighted_error.push_back(out.rate_weighted_error);
    if (config.record_trajectories) result.alpha_trajectories.push_back(std::move(out.trajectory));
    result.diagnostics.crossed_forecasts += out.diagnostics.crossed_forecasts;
    result.diagnostics.empty_intervals += out.diagnostics.empty_intervals;
    result.diagnostics.inflated_quantiles += out.diagnostics.inflated_quantiles;
    if (out.audit) result.audit = std::move(out.audit);
  }
  result.info.dated = data.dated;
  result.info.region_names = data.region_names;
  result.info.step_times = std::move(step_times);
  result.warnings = data.warnings;
  result.calibration_steps = parts.calibration_steps;
  result.window_capacity = capacity;
  return result;
}

PredictionInterval rederive_interval(const AuditRecord& record, const ExperimentConfig& config) {
  CalibrationWindow window(record.window_capacity);
  for (double s : record.window_scores) window.push(s);
  const bool adapt = is_adaptive(config.method);
  const double level = 1.0 - (adapt ? record.alpha : config.hp.target_alpha);
  const QuantileForecast f(record.forecast_lo, record.forecast_hi);
  return make_interval(config.method, f, quantile_with_rules(window, level), config.clamp_nonnegative);
}

Dataset load_dataset(const ExperimentConfig& config) {
  if (!config.demand_csv.empty()) {
    const std::string forecasts = !config.forecast_csv.empty() ? config.forecast_csv : config.predictor.forecast_path;
    return ingest_csv(config.demand_csv,
                      config.predictor.kind == PredictorKind::kFileBacked ? forecasts : std::string(),
                      IngestOptions{config.filter_threshold, config.filter_per_flow, config.gap_policy});
  }
  StreamSpec spec = config.synthetic;
  spec.seed = config.seed;
  Dataset data;
  const std::vector<Observation> stream = generate(spec, config.threads);
  FilterResult filtered = region_filter(stream, config.filter_threshold, config.filter_per_flow);
  std::vector<std::size_t> dense(spec.n_regions, 0);
  std::vector<bool> dropped(spec.n_regions, false);
  for (std::size_t idx : filtered.dropped_regions) {
    dropped[idx] = true;
    data.dropped_regions.push_back(idx);
    data.dropped_region_names.push_back(std::to_string(idx));
  }
  for (std::size_t i = 0; i < spec.n_regions; ++i) {
    if (dropped[i]) continue;
    dense[i] = data.region_names.size();
    data.region_names.push_back(std::to_string(i));
  }
  data.stream = std::move(filtered.stream);
  for (auto& o : data.stream) o.region = dense[o.region];
  return data;
}

}  // namespace contina
