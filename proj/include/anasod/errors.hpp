#pragma once

#include <stdexcept>
#include <string>

namespace anasod {

// Bad argument values: dimension mismatches, out-of-range entries,
// violated simplex invariants.
struct InvalidInputError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A structurally impossible request, e.g. asking the exact decoder for an
// integer encoding whose counts do not sum to the block count.
struct InvalidConfigurationError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct NotFoundError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ParseError : std::runtime_error {
  ParseError(const std::string& msg, int line)
      : std::runtime_error(msg + " (line " + std::to_string(line) + ")"),
        line_number(line) {}
  int line_number;
};

// Result does not fit the requested integer width.
struct CapacityError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericalError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct CalibrationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct UnsupportedError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace anasod
