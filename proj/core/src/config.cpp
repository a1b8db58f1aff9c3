#include <charconv>
#include <cstdint>
#include <fstream>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "contina/error.hpp"
#include "contina/harness.hpp"

namespace contina {

namespace {

[[noreturn]] void bad(std::string_view key, std::string_view value, std::string_view why) {
  throw Error(ErrorCategory::kInvalidArgument,
              fmt::format("setting '{}' = '{}': {}", key, value, why));
}

double to_real(std::string_view key, std::string_view value) {
  double v = 0.0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, v);
  if (value.empty() || ec != std::errc() || ptr != end) bad(key, value, "expected a number");
  return v;
}

std::uint64_t to_unsigned(std::string_view key, std::string_view value) {
  std::uint64_t v = 0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, v);
  if (value.empty() || ec != std::errc() || ptr != end) bad(key, value, "expected a nonnegative integer");
  return v;
}

std::int64_t to_signed(std::string_view key, std::string_view value) {
  std::int64_t v = 0;
  const auto* end = value.data() + value.size();
  const auto [ptr, ec] = std::from_chars(value.data(), end, v);
  if (value.empty() || ec != std::errc() || ptr != end) bad(key, value, "expected an integer");
  return v;
}

bool to_bool(std::string_view key, std::string_view value) {
  if (value == "true" || value == "1" || value == "on" || value == "yes") return true;
  if (value == "false" || value == "0" || value == "off" || value == "no") return false;
  bad(key, value, "expected true or false");
}

template <typename R>
R& regime_as(StreamSpec& spec) {
  if (!std::holds_alternative<R>(spec.regime)) spec.regime = R{};
  return std::get<R>(spec.regime);
}

void set_regime(StreamSpec& spec, std::string_view name) {
  if (name == regime_name(spec.regime)) return;
  if (name == "stationary") spec.regime = Stationary{};
  else if (name == "abrupt_shift") spec.regime = AbruptShift{static_cast<std::int64_t>(spec.horizon / 2), 2.0};
  else if (name == "drift") spec.regime = Drift{};
  else if (name == "heterogeneous") spec.regime = Heterogeneous{};
  else if (name == "k_dependent") spec.regime = KDependent{};
  else throw Error(ErrorCategory::kInvalidArgument, fmt::format("unknown regime '{}'", name));
}

std::string toml_string(std::string_view s) { return fmt::format("\"{}\"", s); }

std::string real(double v) { return fmt::format("{}", v); }

}  // namespace

std::string_view to_string(Method method) noexcept {
  switch (method) {
    case Method::kCp: return "cp";
    case Method::kQcp: return "qcp";
    case Method::kAciFixed: return "aci_fixed";
    case Method::kContina: return "contina";
  }
  return "unknown";
}

Method parse_method(std::string_view text) {
  if (text == "cp") return Method::kCp;
  if (text == "qcp") return Method::kQcp;
  if (text == "aci_fixed" || text == "aci") return Method::kAciFixed;
  if (text == "contina") return Method::kContina;
  throw Error(ErrorCategory::kInvalidArgument, fmt::format("unknown method '{}'", text));
}

std::string_view to_string(GapPolicy policy) noexcept {
  return policy == GapPolicy::kAbort ? "abort" : "drop_day";
}

GapPolicy parse_gap_policy(std::string_view text) {
  if (text == "abort") return GapPolicy::kAbort;
  if (text == "drop_day") return GapPolicy::kDropDay;
  throw Error(ErrorCategory::kInvalidArgument, fmt::format("unknown gap policy '{}'", text));
}

void ExperimentConfig::validate() const {
  hp.validate();
  auto require = [](bool ok, const char* what) {
    if (!ok) throw Error(ErrorCategory::kInvalidArgument, what);
  };
  if (method == Method::kAciFixed) require(aci_gamma > 0.0, "aci_fixed needs a positive aci_gamma");
  require(steps_per_day > 0, "steps_per_day must be positive");
  require(threads >= 1, "threads must be >= 1");
  require(filter_threshold >= 0.0, "filter threshold must be >= 0");
  require(train_frac > 0.0 && calib_frac > 0.0 && train_frac + calib_frac < 1.0,
          "split fractions must be positive with train + calibration < 1");
  if (predictor.kind == PredictorKind::kFileBacked) {
    require(!forecast_csv.empty() || !predictor.forecast_path.empty(),
            "file_backed predictor needs forecast_csv");
    require(!demand_csv.empty(), "file_backed predictor needs a demand_csv source");
  }
  if (demand_csv.empty()) synthetic.validate();
}

void apply_setting(ExperimentConfig& c, std::string_view key, std::string_view value) {
  StreamSpec& s = c.synthetic;
  if (key == "method") c.method = parse_method(value);
  else if (key == "alpha") c.hp.target_alpha = to_real(key, value);
  else if (key == "gamma1") c.hp.gamma1 = to_real(key, value);
  else if (key == "beta") c.hp.beta = to_real(key, value);
  else if (key == "epsilon") c.hp.epsilon = to_real(key, value);
  else if (key == "aci_gamma" || key == "gamma") c.aci_gamma = to_real(key, value);
  else if (key == "window") c.window = to_unsigned(key, value);
  else if (key == "predictor") c.predictor.kind = parse_predictor_kind(value);
  else if (key == "seasonal_window") c.predictor.window_length = to_unsigned(key, value);
  else if (key == "cold_start") {
    if (value == "global") c.predictor.cold_start = ColdStartPolicy::kGlobal;
    else if (value == "error") c.predictor.cold_start = ColdStartPolicy::kError;
    else bad(key, value, "expected global or error");
  }
  else if (key == "linear_step") c.predictor.step = to_real(key, value);
  else if (key == "linear_epochs") c.predictor.epochs = to_unsigned(key, value);
  else if (key == "online_predictor") c.online_predictor = to_bool(key, value);
  else if (key == "slide_static_windows") c.slide_static_windows = to_bool(key, value);
  else if (key == "clamp_nonnegative") c.clamp_nonnegative = to_bool(key, value);
  else if (key == "demand_csv") c.demand_csv = std::string(value);
  else if (key == "forecast_csv") {
    c.forecast_csv = std::string(value);
    c.predictor.forecast_path = c.forecast_csv;
  }
  else if (key == "filter_threshold") c.filter_threshold = to_real(key, value);
  else if (key == "filter_per_flow") c.filter_per_flow = to_bool(key, value);
  else if (key == "gap_policy") c.gap_policy = parse_gap_policy(value);
  else if (key == "train_frac") c.train_frac = to_real(key, value);
  else if (key == "calib_frac") c.calib_frac = to_real(key, value);
  else if (key == "steps_per_day") c.steps_per_day = to_signed(key, value);
  else if (key == "seed") {
    c.seed = to_unsigned(key, value);
    s.seed = c.seed;
  }
  else if (key == "threads") c.threads = to_unsigned(key, value);
  else if (key == "audit") c.audit = to_bool(key, value);
  else if (key == "record_trajectories") c.record_trajectories = to_bool(key, value);
  else if (key == "n_regions") s.n_regions = to_unsigned(key, value);
  else if (key == "horizon") s.horizon = to_unsigned(key, value);
  else if (key == "regime") set_regime(s, value);
  else if (key == "shift_at") regime_as<AbruptShift>(s).at = to_signed(key, value);
  else if (key == "shift_scale") regime_as<AbruptShift>(s).scale = to_real(key, value);
  else if (key == "drift_rate") regime_as<Drift>(s).rate = to_real(key, value);
  else if (key == "scale_lo") regime_as<Heterogeneous>(s).scale_lo = to_real(key, value);
  else if (key == "scale_hi") regime_as<Heterogeneous>(s).scale_hi = to_real(key, value);
  else if (key == "shift_period") regime_as<Heterogeneous>(s).period = to_signed(key, value);
  else if (key == "dependence_k") regime_as<KDependent>(s).k = to_unsigned(key, value);
  else if (key == "noise") s.noise = parse_noise_family(value);
  else if (key == "base_lo") s.base_lo = to_real(key, value);
  else if (key == "base_hi") s.base_hi = to_real(key, value);
  else if (key == "seasonal_amplitude") s.seasonal_amplitude = to_real(key, value);
  else if (key == "noise_cv") s.noise_cv = to_real(key, value);
  else throw Error(ErrorCategory::kInvalidArgument, fmt::format("unknown setting '{}'", key));
}

namespace {

std::vector<CLI::ConfigItem> read_items(const std::filesystem::path& path) {
  std::ifstream probe(path);
  if (!probe) throw Error(ErrorCategory::kIo, "cannot open config file '" + path.string() + "'");
  try {
    return CLI::ConfigTOML().from_file(path.string());
  } catch (const CLI::Error& e) {
    throw Error(ErrorCategory::kInvalidArgument,
                "cannot parse config file '" + path.string() + "': " + e.what());
  }
}

bool is_section_marker(const CLI::ConfigItem& item) {
  return item.name == "++" || item.name == "--";
}

std::string joined(const std::vector<std::string>& inputs) {
  std::string out;
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    if (k > 0) out += ",";
    out += inputs[k];
  }
  return out;
}

}  // namespace

ExperimentConfig load_config_file(const std::filesystem::path& path) {
  return load_manifest(path).config;
}

Manifest load_manifest(const std::filesystem::path& path) {
  Manifest m;
  for (const auto& item : read_items(path)) {
    if (is_section_marker(item)) continue;
    const std::string value = joined(item.inputs);
    if (item.parents.empty()) {
      apply_setting(m.config, item.name, value);
    } else if (item.parents.size() == 1 && item.parents[0] == "result") {
      if (item.name == "dated") m.dated = to_bool("result.dated", value);
    } else {
      throw Error(ErrorCategory::kInvalidArgument,
                  "unknown config section for key '" + item.fullname() + "'");
    }
  }
  return m;
}

std::string to_manifest_text(const ExperimentConfig& c) {
  std::ostringstream out;
  auto kv = [&out](std::string_view key, const std::string& value) {
    out << key << " = " << value << '\n';
  };
  const auto yes = [](bool b) { return std::string(b ? "true" : "false"); };
  out << "# contina run manifest\n";
  kv("method", toml_string(to_string(c.method)));
  kv("alpha", real(c.hp.target_alpha));
  kv("gamma1", real(c.hp.gamma1));
  kv("beta", real(c.hp.beta));
  kv("epsilon", real(c.hp.epsilon));
  kv("aci_gamma", real(c.aci_gamma));
  kv("window", std::to_string(c.window));
  kv("predictor", toml_string(to_string(c.predictor.kind)));
  kv("seasonal_window", std::to_string(c.predictor.window_length));
  kv("cold_start", toml_string(c.predictor.cold_start == ColdStartPolicy::kGlobal ? "global" : "error"));
  kv("linear_step", real(c.predictor.step));
  kv("linear_epochs", std::to_string(c.predictor.epochs));
  kv("online_predictor", yes(c.online_predictor));
  kv("slide_static_windows", yes(c.slide_static_windows));
  kv("clamp_nonnegative", yes(c.clamp_nonnegative));
  kv("train_frac", real(c.train_frac));
  kv("calib_frac", real(c.calib_frac));
  kv("steps_per_day", std::to_string(c.steps_per_day));
  kv("seed", std::to_string(c.seed));
  kv("audit", yes(c.audit));
  kv("filter_threshold", real(c.filter_threshold));
  kv("filter_per_flow", yes(c.filter_per_flow));
  kv("gap_policy", toml_string(to_string(c.gap_policy)));
  if (!c.demand_csv.empty()) {
    kv("demand_csv", toml_string(c.demand_csv));
    if (!c.forecast_csv.empty()) kv("forecast_csv", toml_string(c.forecast_csv));
  } else {
    const StreamSpec& s = c.synthetic;
    kv("n_regions", std::to_string(s.n_regions));
    kv("horizon", std::to_string(s.horizon));
    kv("regime", toml_string(regime_name(s.regime)));
    std::visit(
        [&](const auto& r) {
          using R = std::decay_t<decltype(r)>;
          if constexpr (std::is_same_v<R, AbruptShift>) {
            kv("shift_at", std::to_string(r.at));
            kv("shift_scale", real(r.scale));
          } else if constexpr (std::is_same_v<R, Drift>) {
            kv("drift_rate", real(r.rate));
          } else if constexpr (std::is_same_v<R, Heterogeneous>) {
            kv("scale_lo", real(r.scale_lo));
            kv("scale_hi", real(r.scale_hi));
            kv("shift_period", std::to_string(r.period));
          } else if constexpr (std::is_same_v<R, KDependent>) {
            kv("dependence_k", std::to_string(r.k));
          }
        },
        s.regime);
    kv("noise", toml_string(to_string(s.noise)));
    kv("base_lo", real(s.base_lo));
    kv("base_hi", real(s.base_hi));
    kv("seasonal_amplitude", real(s.seasonal_amplitude));
    kv("noise_cv", real(s.noise_cv));
  }
  return out.str();
}

}  // namespace contina
