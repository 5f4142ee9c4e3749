#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace redlab {

// Error raised for malformed configs / inputs (CLI exit code 1).
struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Error raised when a computation cannot proceed (CLI exit code 2).
struct RuntimeError : std::runtime_error {
  explicit RuntimeError(const std::string& what) : std::runtime_error(what) {}
};

namespace tol {
inline constexpr double kProbSum = 1e-12;     // type probabilities must sum to 1
inline constexpr double kRatioTie = 1e-9;     // relative tie window for argmax sets
inline constexpr double kCritical = 1e-12;    // relative window for lambda == CAR
inline constexpr double kClosedForm = 1e-9;   // closed form vs general algorithm
inline constexpr double kMuStar = 1e-4;       // bisection tolerance on mu*
}  // namespace tol

// Rounds to 12 significant digits; applied to every number we print so that
// emitted files are stable and re-parse to the same values.
double round12(double x);

std::string format12(double x);

}  // namespace redlab
