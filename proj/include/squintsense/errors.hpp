#pragma once

#include <stdexcept>
#include <string>

namespace squint {

/// Invalid or inconsistent configuration (bad bounds, degenerate ROI, arccos domain).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A power allocation problem has no solution under the requested thresholds.
class InfeasibleError : public std::runtime_error {
 public:
  explicit InfeasibleError(const std::string& what, double last_threshold = 0.0)
      : std::runtime_error(what), last_threshold_(last_threshold) {}

  /// Last SINR/SNR threshold (linear) that was attempted before giving up.
  double last_threshold() const noexcept { return last_threshold_; }

 private:
  double last_threshold_;
};

/// Dictionary or input that makes a numerical routine ill-defined.
class DegenerateError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace squint
