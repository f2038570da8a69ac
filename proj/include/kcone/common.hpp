#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace kcone {

using cxd = std::complex<double>;

inline constexpr double kPi = 3.14159265358979323846;
inline constexpr double kTwoPi = 2.0 * kPi;

// Base for everything thrown by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad inputs: invalid parameters, malformed configs, unknown keys.
struct ConfigError : Error {
  using Error::Error;
};

// A computation that started from valid inputs failed to produce a usable
// result (non-convergence, loss of positivity, incompatible data).
struct NumericalError : Error {
  using Error::Error;
};

}  // namespace kcone
