#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <string_view>

namespace contina {

enum class Flow : std::uint8_t { kIn = 0, kOut = 1 };

inline constexpr std::size_t kFlowCount = 2;
inline constexpr std::size_t kLagCount = 6;
inline constexpr std::int64_t kHoursPerDay = 24;

constexpr std::size_t flow_index(Flow flow) noexcept { return static_cast<std::size_t>(flow); }
constexpr Flow flow_from_index(std::size_t j) noexcept { return j == 0 ? Flow::kIn : Flow::kOut; }
std::string_view to_string(Flow flow) noexcept;
// Accepts "in" / "out". Throws Error(kInvalidInput) otherwise.
Flow parse_flow(std::string_view text);

// Lags are most-recent first: lags[0] is the demand one hour earlier.
using Lags = std::array<double, kLagCount>;

// Everything a predictor may look at before the demand is revealed.
struct Features {
  std::int64_t t = 0;  // hours
  std::size_t region = 0;
  Flow flow = Flow::kIn;
  Lags lags{};

  int hour_of_day() const noexcept {
    const auto h = t % kHoursPerDay;
    return static_cast<int>(h < 0 ? h + kHoursPerDay : h);
  }
};

struct Observation {
  std::int64_t t = 0;
  std::size_t region = 0;
  Flow flow = Flow::kIn;
  double y = 0.0;
  Lags lags{};

  Features features() const { return {t, region, flow, lags}; }
  // Throws Error(kInvalidInput) unless y and every lag are finite and y >= 0.
  void validate() const;
};

}  // namespace contina
