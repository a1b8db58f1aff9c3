#pragma once

#include <stdexcept>
#include <string>

namespace contina {

// Failure categories. The CLI maps each one to a distinct exit code.
enum class ErrorCategory {
  kInvalidArgument,   // bad configuration or parameter
  kInvalidInput,      // malformed or out-of-range data value
  kEmptyCalibration,  // quantile query on an empty calibration set
  kStructural,        // incomplete or inconsistent ledger / stream
  kMissingData,       // forecast row or cell absent
  kIo,                // file could not be read or written
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }

 private:
  ErrorCategory category_;
};

const char* to_string(ErrorCategory category) noexcept;

// Process exit code for a category: 2 + the enumerator index.
int exit_code(ErrorCategory category) noexcept;

}  // namespace contina
