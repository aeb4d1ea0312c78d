#pragma once

#include <stdexcept>
#include <string>

namespace sdwave {

// Exception types shared across the library. Each maps to one failure class
// named by the operation contracts; the CLI turns ConfigError into exit 2.

struct IndexError : std::out_of_range {
  using std::out_of_range::out_of_range;
};

struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Zero field (or vanishing L^gamma moment) handed to a projection path.
struct DegenerateInputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// No sign change of the Nehari functional on the scan interval.
struct BracketingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FitError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace sdwave
