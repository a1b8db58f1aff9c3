#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "contina/observation.hpp"

namespace contina {

// Level multiplier regimes.
struct Stationary {};
// Every region's demand is multiplied by `scale` from step `at` on.
struct AbruptShift {
  std::int64_t at = 0;
  double scale = 2.0;
};
// Multiplier 1 + rate * t, floored at 0.05.
struct Drift {
  double rate = 0.0;
};
// Each region draws one shift scale log-uniformly from [scale_lo, scale_hi]
// and toggles between level 1 and that scale every `period` steps, starting
// from a region-specific offset.
struct Heterogeneous {
  double scale_lo = 0.5;
  double scale_hi = 2.0;
  std::int64_t period = 24 * 7;
};
// Stationary level; the noise is a moving sum of K white innovations, so
// innovations K or more steps apart are independent.
struct KDependent {
  std::size_t k = 1;
};

using Regime = std::variant<Stationary, AbruptShift, Drift, Heterogeneous, KDependent>;

enum class NoiseFamily { kGaussian, kOverdispersed };

std::string_view regime_name(const Regime& regime) noexcept;
std::string_view to_string(NoiseFamily noise) noexcept;
NoiseFamily parse_noise_family(std::string_view text);

struct StreamSpec {
  std::size_t n_regions = 10;
  std::size_t horizon = 24 * 28;
  std::uint64_t seed = 1;
  Regime regime = Stationary{};
  NoiseFamily noise = NoiseFamily::kGaussian;
  // Per-region base demand is drawn log-uniformly from [base_lo, base_hi].
  double base_lo = 10.0;
  double base_hi = 60.0;
  // Relative amplitude of the 24-hour cycle; 0 gives i.i.d. demand.
  double seasonal_amplitude = 0.5;
  // Noise scale relative to the mean level.
  double noise_cv = 0.25;

  void validate() const;
};

// SplitMix64 finalizer: the per-stream sub-seed for (seed, stream id).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

// Observations ordered by (t, region, flow); t runs over [0, horizon). The
// six lag features come from the same series, with a burn-in before t = 0.
// Output depends only on `spec`, never on `threads`.
std::vector<Observation> generate(const StreamSpec& spec, std::size_t threads = 1);

// Standardized noise innovations driving one (region, flow) series over
// [0, horizon).
std::vector<double> innovation_series(const StreamSpec& spec, std::size_t region, Flow flow);

// Level multiplier applied to `region` at step t.
double regime_multiplier(const StreamSpec& spec, std::size_t region, std::int64_t t);

struct FilterResult {
  std::vector<Observation> stream;
  std::vector<std::size_t> dropped_regions;
};

// Drops regions whose mean demand (both flows pooled, or each flow separately
// when `per_flow`) is below `threshold`. Throws kInvalidInput when nothing
// survives and kInvalidArgument for a negative threshold.
FilterResult region_filter(std::span<const Observation> stream, double threshold = 2.0,
                           bool per_flow = false);

struct StreamSplit {
  std::vector<Observation> train;
  std::vector<Observation> calibration;
  std::vector<Observation> deployment;
  std::size_t train_steps = 0;
  std::size_t calibration_steps = 0;
  std::size_t deployment_steps = 0;
};

// Contiguous chronological split over distinct time steps. Boundaries are
// floor(train_frac * T) and floor((train_frac + calib_frac) * T). Rejects
// unsorted streams, invalid fractions and empty segments.
StreamSplit split(std::span<const Observation> stream, double train_frac, double calib_frac);

}  // namespace contina
