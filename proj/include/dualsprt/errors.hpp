#pragma once

#include <stdexcept>
#include <string>

namespace dualsprt {

/// Malformed scenario or configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Threshold calibration could not meet its target (CLI exit code 3).
class CalibrationError : public std::runtime_error {
 public:
  CalibrationError(const std::string& what, double lo_value, double hi_value)
      : std::runtime_error(what), lo_value_(lo_value), hi_value_(hi_value) {}

  double lo_value() const { return lo_value_; }
  double hi_value() const { return hi_value_; }

 private:
  double lo_value_;
  double hi_value_;
};

/// Too many trials hit the slot cap (CLI exit code 3).
class CensoringError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace dualsprt
