#pragma once

#include <stdexcept>
#include <string>

namespace attrition {

// Malformed input data (CSV syntax, inconsistent columns, degenerate designs).
class data_error : public std::runtime_error {
 public:
  explicit data_error(const std::string& what) : std::runtime_error(what) {}
};

// Invalid configuration or misuse of an operation.
class config_error : public std::invalid_argument {
 public:
  explicit config_error(const std::string& what) : std::invalid_argument(what) {}
};

// Requested computation exceeds an enumeration capacity limit.
class capacity_error : public std::runtime_error {
 public:
  explicit capacity_error(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace attrition
