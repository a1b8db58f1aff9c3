#include <benchmark/benchmark.h>

#include <random>

#include "contina/conformal.hpp"
#include "contina/harness.hpp"
#include "contina/quantile_engine.hpp"

namespace {

void BM_WindowPushAndQuery(benchmark::State& state) {
  const auto capacity = static_cast<std::size_t>(state.range(0));
  contina::CalibrationWindow window(capacity);
  std::mt19937_64 rng(1);
  std::normal_distribution<double> score;
  for (std::size_t i = 0; i < capacity; ++i) window.push(score(rng));
  for (auto _ : state) {
    window.push(score(rng));
    benchmark::DoNotOptimize(contina::quantile_with_rules(window, 0.9));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_WindowPushAndQuery)->Arg(100)->Arg(1000)->Arg(10000);

void BM_IntervalCycle(benchmark::State& state) {
  contina::CalibrationWindow window(500);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> noise;
  for (int i = 0; i < 500; ++i) window.push(noise(rng));
  for (auto _ : state) {
    const double y = 10.0 + noise(rng);
    const contina::QuantileForecast f(8.0, 12.0);
    const auto q = contina::quantile_with_rules(window, 0.9);
    const auto interval = contina::build_interval_qcp(f, q);
    benchmark::DoNotOptimize(contina::contains(interval, y));
    window.push(contina::conformity_score(y, f));
  }
  state.SetItemsProcessed(state.iterations());
}
BENCHMARK(BM_IntervalCycle);

void BM_Replay(benchmark::State& state) {
  contina::ExperimentConfig config;
  config.method = static_cast<contina::Method>(state.range(0));
  config.predictor.kind = contina::PredictorKind::kSeasonalWindow;
  config.synthetic.n_regions = 10;
  config.synthetic.horizon = 24 * 60;
  config.synthetic.regime = contina::Heterogeneous{};
  const contina::Dataset data = contina::load_dataset(config);
  for (auto _ : state) {
    benchmark::DoNotOptimize(contina::run_replay(config, data));
  }
  state.SetLabel(std::string(contina::to_string(config.method)));
}
BENCHMARK(BM_Replay)
    ->Arg(static_cast<int>(contina::Method::kQcp))
    ->Arg(static_cast<int>(contina::Method::kContina))
    ->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
