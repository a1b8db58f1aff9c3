#include "contina/error.hpp"

namespace contina {

const char* to_string(ErrorCategory category) noexcept {
  switch (category) {
    case ErrorCategory::kInvalidArgument: return "invalid-argument";
    case ErrorCategory::kInvalidInput: return "invalid-input";
    case ErrorCategory::kEmptyCalibration: return "empty-calibration";
    case ErrorCategory::kStructural: return "structural";
    case ErrorCategory::kMissingData: return "missing-data";
    case ErrorCategory::kIo: return "io";
  }
  return "unknown";
}

int exit_code(ErrorCategory category) noexcept {
  return 2 + static_cast<int>(category);
}

}  // namespace contina
