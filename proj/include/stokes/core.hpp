#pragma once

#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace stokes {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Mat2 = Eigen::Matrix2d;
using Complex = std::complex<double>;

/// Non-fatal diagnostics attached to results (validation thresholds, clipping).
using Warnings = std::vector<std::string>;

inline constexpr double kPi = std::numbers::pi;
inline constexpr double kBoltzmann = 1.380649e-23;          // J/K
inline constexpr double kAtomicMassUnit = 1.66053906660e-27;  // kg
inline constexpr double kRb87Mass = 86.909180527 * kAtomicMassUnit;

inline constexpr const char* kVersion = "0.4.1";

enum class ErrorCategory { config = 2, domain = 3, numerical = 4, io = 5 };

class Error : public std::runtime_error {
 public:
  Error(ErrorCategory category, const std::string& what)
      : std::runtime_error(what), category_(category) {}

  ErrorCategory category() const noexcept { return category_; }
  int exit_code() const noexcept { return static_cast<int>(category_); }

 private:
  ErrorCategory category_;
};

/// Invalid physical input: bad quantum numbers, nonpositive sizes, mismatched counts.
class DomainError : public Error {
 public:
  explicit DomainError(const std::string& what) : Error(ErrorCategory::domain, what) {}
};

/// Integration or fitting could not meet its tolerance.
class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what) : Error(ErrorCategory::numerical, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorCategory::io, what) {}
};

class ConfigError : public Error {
 public:
  ConfigError(const std::string& key, const std::string& what, int line = 0)
      : Error(ErrorCategory::config, format(key, what, line)), key_(key), line_(line) {}

  const std::string& key() const noexcept { return key_; }
  int line() const noexcept { return line_; }

 private:
  static std::string format(const std::string& key, const std::string& what, int line) {
    std::string out;
    if (line > 0) out += "line " + std::to_string(line) + ": ";
    if (!key.empty()) out += "'" + key + "': ";
    return out + what;
  }

  std::string key_;
  int line_;
};

}  // namespace stokes
