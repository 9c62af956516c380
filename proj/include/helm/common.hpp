#pragma once

#include <Eigen/Core>

#include <complex>
#include <stdexcept>
#include <string>

namespace helm {

using Vec2 = Eigen::Vector2d;
using cplx = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;

// Raised when inputs are well-formed but the requested computation is not
// possible (point inside an obstacle, singular system, runaway refinement).
class DomainError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Raised for malformed configuration: unknown keys, bad values, missing files.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kFormatVersion = "1";

}  // namespace helm
