// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>

namespace ctlio {

/// Query time outside the evaluable interval of a spline / trajectory.
class RangeError : public std::runtime_error {
public:
  RangeError(double t, double t_min, double t_max)
      : std::runtime_error("time " + std::to_string(t) + " outside evaluable range [" +
                           std::to_string(t_min) + ", " + std::to_string(t_max) + "]"),
        t(t), t_min(t_min), t_max(t_max) {}

  double t;
  double t_min;
  double t_max;
};

/// Malformed input file or unwritable output.
class IoError : public std::runtime_error {
public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

/// Bad configuration key or value.
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace ctlio
