#pragma once

#include <stdexcept>
#include <string>

namespace apl {

/// Non-finite value met where the numerics require finite ones.
struct NumericalFault : std::runtime_error {
  explicit NumericalFault(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed file content; carries the 1-based offending line when known.
struct ParseError : std::runtime_error {
  ParseError(const std::string& what, long line_number)
      : std::runtime_error(what + " (line " + std::to_string(line_number) + ")"),
        line(line_number) {}
  explicit ParseError(const std::string& what) : std::runtime_error(what), line(0) {}
  long line;
};

}  // namespace apl
