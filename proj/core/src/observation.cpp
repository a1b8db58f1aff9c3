#include "contina/observation.hpp"

#include <cmath>
#include <string>

#include "contina/error.hpp"

namespace contina {

std::string_view to_string(Flow flow) noexcept { return flow == Flow::kIn ? "in" : "out"; }

Flow parse_flow(std::string_view text) {
  if (text == "in") return Flow::kIn;
  if (text == "out") return Flow::kOut;
  throw Error(ErrorCategory::kInvalidInput, "flow must be 'in' or 'out', got '" + std::string(text) + "'");
}

void Observation::validate() const {
  if (!std::isfinite(y) || y < 0.0) {
    throw Error(ErrorCategory::kInvalidInput,
                "demand must be finite and nonnegative (t=" + std::to_string(t) +
                    ", region=" + std::to_string(region) + ")");
  }
  for (double lag : lags) {
    if (!std::isfinite(lag)) {
      throw Error(ErrorCategory::kInvalidInput, "lag feature is not finite (t=" + std::to_string(t) + ")");
    }
  }
}

}  // namespace contina
