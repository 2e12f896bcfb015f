#pragma once

#include <stdexcept>
#include <string>

namespace abcreg {

// Error categories map onto CLI exit codes: formula -> 2, data -> 3,
// design/rank -> 4, numeric -> 5.
struct FormulaError : std::runtime_error {
  std::size_t position;
  explicit FormulaError(const std::string& msg, std::size_t pos = 0)
      : std::runtime_error(msg), position(pos) {}
};

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DesignError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace abcreg
