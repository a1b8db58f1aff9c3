#include "contina/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <random>
#include <string>
#include <thread>

#include "contina/error.hpp"

namespace contina {

namespace {

constexpr std::uint64_t kParamsStream = 0x5EED'0000ULL;

// Engine: std::mt19937_64. The transforms below are written out so the
// output does not depend on the standard library's distribution classes.
double uniform01(std::mt19937_64& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

double standard_normal(std::mt19937_64& rng) {
  const double u1 = 1.0 - uniform01(rng);  // (0, 1]
  const double u2 = uniform01(rng);
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double log_uniform(std::mt19937_64& rng, double lo, double hi) {
  return lo * std::exp(uniform01(rng) * std::log(hi / lo));
}

struct RegionParams {
  double base[kFlowCount];
  double phase[kFlowCount];
  double shift_scale;
  std::int64_t shift_offset;
};

RegionParams region_params(const StreamSpec& spec, std::size_t region) {
  std::mt19937_64 rng(derive_seed(spec.seed, kParamsStream + region));
  RegionParams p{};
  const double base = log_uniform(rng, spec.base_lo, spec.base_hi);
  p.base[0] = base;
  p.base[1] = base * (0.8 + 0.4 * uniform01(rng));
  p.phase[0] = 24.0 * uniform01(rng);
  p.phase[1] = p.phase[0] + 1.0 + 4.0 * uniform01(rng);
  p.shift_scale = 1.0;
  p.shift_offset = 0;
  if (const auto* h = std::get_if<Heterogeneous>(&spec.regime)) {
    p.shift_scale = log_uniform(rng, h->scale_lo, h->scale_hi);
    p.shift_offset = static_cast<std::int64_t>(uniform01(rng) * static_cast<double>(2 * h->period));
  }
  return p;
}

double multiplier(const StreamSpec& spec, const RegionParams& p, std::int64_t t) {
  return std::visit(
      [&](const auto& r) -> double {
        using R = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<R, AbruptShift>) {
          return t >= r.at ? r.scale : 1.0;
        } else if constexpr (std::is_same_v<R, Drift>) {
          return std::max(0.05, 1.0 + r.rate * static_cast<double>(t));
        } else if constexpr (std::is_same_v<R, Heterogeneous>) {
          const std::int64_t shifted = t + p.shift_offset;
          const std::int64_t block = shifted >= 0 ? shifted / r.period : -1;
          return (block % 2 != 0) ? p.shift_scale : 1.0;
        } else {
          return 1.0;
        }
      },
      spec.regime);
}

std::size_t dependence(const StreamSpec& spec) {
  if (const auto* k = std::get_if<KDependent>(&spec.regime)) return k->k;
  return 1;
}

std::uint64_t series_stream(std::size_t region, Flow flow) {
  return 2 * static_cast<std::uint64_t>(region) + flow_index(flow);
}

// Innovations over [-burn_in, horizon).
std::vector<double> innovations(const StreamSpec& spec, std::size_t burn_in, std::mt19937_64& rng) {
  const std::size_t k = dependence(spec);
  const std::size_t n = burn_in + spec.horizon;
  std::vector<double> white(n + k - 1);
  for (double& z : white) z = standard_normal(rng);
  std::vector<double> out(n);
  const double norm = 1.0 / std::sqrt(static_cast<double>(k));
  for (std::size_t s = 0; s < n; ++s) {
    double sum = 0.0;
    for (std::size_t l = 0; l < k; ++l) sum += white[s + l];
    out[s] = sum * norm;
  }
  return out;
}

// Demand for one (region, flow) over [-burn_in, horizon).
std::vector<double> series(const StreamSpec& spec, const RegionParams& p, std::size_t region,
                           Flow flow, std::size_t burn_in) {
  std::mt19937_64 rng(derive_seed(spec.seed, series_stream(region, flow)));
  const std::vector<double> eps = innovations(spec, burn_in, rng);
  const std::size_t j = flow_index(flow);
  std::vector<double> y(eps.size());
  for (std::size_t s = 0; s < eps.size(); ++s) {
    const std::int64_t t = static_cast<std::int64_t>(s) - static_cast<std::int64_t>(burn_in);
    const double hour = static_cast<double>(((t % 24) + 24) % 24);
    const double season =
        1.0 + spec.seasonal_amplitude * std::sin(2.0 * std::numbers::pi * (hour + p.phase[j]) / 24.0);
    const double mean = p.base[j] * season * multiplier(spec, p, std::max<std::int64_t>(t, 0));
    double value = 0.0;
    if (spec.noise == NoiseFamily::kGaussian) {
      value = mean * (1.0 + spec.noise_cv * eps[s]);
    } else {
      const double cv = spec.noise_cv;
      const double rate = mean * std::exp(cv * eps[s] - 0.5 * cv * cv);
      value = std::round(rate + std::sqrt(rate) * standard_normal(rng));
    }
    y[s] = std::max(0.0, value);
  }
  return y;
}

}  // namespace

std::string_view regime_name(const Regime& regime) noexcept {
  switch (regime.index()) {
    case 0: return "stationary";
    case 1: return "abrupt_shift";
    case 2: return "drift";
    case 3: return "heterogeneous";
    case 4: return "k_dependent";
  }
  return "unknown";
}

std::string_view to_string(NoiseFamily noise) noexcept {
  return noise == NoiseFamily::kGaussian ? "gaussian" : "overdispersed";
}

NoiseFamily parse_noise_family(std::string_view text) {
  if (text == "gaussian") return NoiseFamily::kGaussian;
  if (text == "overdispersed" || text == "negative_binomial") return NoiseFamily::kOverdispersed;
  throw Error(ErrorCategory::kInvalidArgument, "unknown noise family '" + std::string(text) + "'");
}

void StreamSpec::validate() const {
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCategory::kInvalidArgument, what);
  };
  require(n_regions > 0, "n_regions must be positive");
  require(horizon > 0, "horizon must be positive");
  require(base_lo > 0.0 && base_hi >= base_lo, "base level range must satisfy 0 < lo <= hi");
  require(seasonal_amplitude >= 0.0 && seasonal_amplitude < 1.0, "seasonal amplitude must lie in [0, 1)");
  require(noise_cv >= 0.0, "noise cv must be nonnegative");
  std::visit(
      [&](const auto& r) {
        using R = std::decay_t<decltype(r)>;
        if constexpr (std::is_same_v<R, AbruptShift>) {
          require(r.at >= 0 && static_cast<std::size_t>(r.at) < horizon, "shift time outside horizon");
          require(r.scale > 0.0, "shift scale must be positive");
        } else if constexpr (std::is_same_v<R, Heterogeneous>) {
          require(r.scale_lo > 0.0 && r.scale_hi >= r.scale_lo, "heterogeneous scales must satisfy 0 < lo <= hi");
          require(r.period > 0, "heterogeneous period must be positive");
        } else if constexpr (std::is_same_v<R, KDependent>) {
          require(r.k >= 1, "dependence window must be >= 1");
        }
      },
      regime);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
  std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double regime_multiplier(const StreamSpec& spec, std::size_t region, std::int64_t t) {
  return multiplier(spec, region_params(spec, region), t);
}

std::vector<double> innovation_series(const StreamSpec& spec, std::size_t region, Flow flow) {
  spec.validate();
  std::mt19937_64 rng(derive_seed(spec.seed, series_stream(region, flow)));
  std::vector<double> all = innovations(spec, kLagCount, rng);
  return {all.begin() + kLagCount, all.end()};
}

std::vector<Observation> generate(const StreamSpec& spec, std::size_t threads) {
  spec.validate();
  const std::size_t n = spec.n_regions;
  const std::size_t horizon = spec.horizon;
  std::vector<Observation> out(horizon * n * kFlowCount);

  auto fill_region = [&](std::size_t i) {
    const RegionParams p = region_params(spec, i);
    for (std::size_t j = 0; j < kFlowCount; ++j) {
      const Flow flow = flow_from_index(j);
      const std::vector<double> y = series(spec, p, i, flow, kLagCount);
      for (std::size_t t = 0; t < horizon; ++t) {
        Observation& o = out[(t * n + i) * kFlowCount + j];
        o.t = static_cast<std::int64_t>(t);
        o.region = i;
        o.flow = flow;
        o.y = y[t + kLagCount];
        for (std::size_t l = 0; l < kLagCount; ++l) o.lags[l] = y[t + kLagCount - 1 - l];
      }
    }
  };

  threads = std::clamp<std::size_t>(threads, 1, n);
  if (threads == 1) {
    for (std::size_t i = 0; i < n; ++i) fill_region(i);
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < threads; ++w) {
      pool.emplace_back([&, w] {
        for (std::size_t i = w; i < n; i += threads) fill_region(i);
      });
    }
  }
  return out;
}

FilterResult region_filter(std::span<const Observation> stream, double threshold, bool per_flow) {
  if (!(threshold >= 0.0)) {
    throw Error(ErrorCategory::kInvalidArgument, "region filter threshold must be >= 0");
  }
  std::map<std::size_t, std::pair<double, std::size_t>> sums[kFlowCount];
  for (const auto& o : stream) {
    auto& s = sums[flow_index(o.flow)][o.region];
    s.first += o.y;
    ++s.second;
  }
  std::map<std::size_t, bool> keep;
  for (std::size_t j = 0; j < kFlowCount; ++j) {
    for (const auto& [region, s] : sums[j]) keep.emplace(region, true);
  }
  for (auto& [region, kept] : keep) {
    double total = 0.0;
    std::size_t count = 0;
    bool flow_below = false;
    for (std::size_t j = 0; j < kFlowCount; ++j) {
      auto it = sums[j].find(region);
      if (it == sums[j].end()) continue;
      total += it->second.first;
      count += it->second.second;
      if (it->second.first / static_cast<double>(it->second.second) < threshold) flow_below = true;
    }
    kept = per_flow ? !flow_below : !(total / static_cast<double>(count) < threshold);
  }

  FilterResult out;
  for (const auto& [region, kept] : keep) {
    if (!kept) out.dropped_regions.push_back(region);
  }
  if (out.dropped_regions.size() == keep.size() && !keep.empty()) {
    throw Error(ErrorCategory::kInvalidInput,
                "empty dataset: every region has mean demand below " + std::to_string(threshold));
  }
  out.stream.reserve(stream.size());
  for (const auto& o : stream) {
    if (keep[o.region]) out.stream.push_back(o);
  }
  return out;
}

StreamSplit split(std::span<const Observation> stream, double train_frac, double calib_frac) {
  if (!(train_frac > 0.0) || !(calib_frac > 0.0) || !(train_frac + calib_frac < 1.0)) {
    throw Error(ErrorCategory::kInvalidArgument,
                "split fractions must be positive with train + calibration < 1");
  }
  std::vector<std::int64_t> steps;
  for (std::size_t k = 0; k < stream.size(); ++k) {
    if (k > 0 && stream[k].t < stream[k - 1].t) {
      throw Error(ErrorCategory::kInvalidArgument, "split requires a chronologically ordered stream");
    }
    if (steps.empty() || steps.back() != stream[k].t) steps.push_back(stream[k].t);
  }
  const double total = static_cast<double>(steps.size());
  const auto train_end = static_cast<std::size_t>(std::floor(train_frac * total + 1e-9));
  const auto calib_end = static_cast<std::size_t>(std::floor((train_frac + calib_frac) * total + 1e-9));
  StreamSplit out;
  out.train_steps = train_end;
  out.calibration_steps = calib_end - train_end;
  out.deployment_steps = steps.size() - calib_end;
  if (out.train_steps == 0 || out.calibration_steps == 0 || out.deployment_steps == 0) {
    throw Error(ErrorCategory::kInvalidArgument,
                "invalid split: a segment would be empty (" + std::to_string(out.train_steps) + "/" +
                    std::to_string(out.calibration_steps) + "/" + std::to_string(out.deployment_steps) + ")");
  }
  const std::int64_t calib_begin_t = steps[train_end];
  const std::int64_t deploy_begin_t = steps[calib_end];
  for (const auto& o : stream) {
    if (o.t < calib_begin_t) {
      out.train.push_back(o);
    } else if (o.t < deploy_begin_t) {
      out.calibration.push_back(o);
    } else {
      out.deployment.push_back(o);
    }
  }
  return out;
}

}  // namespace contina
