#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace mixopt {

using Vec = std::vector<double>;

/// Thrown when an argument violates an operation's precondition.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Thrown when a numerical routine cannot produce a trustworthy answer
/// (singular system, residual check failed, ambiguous stationary distribution).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Which long-run cost an evaluation refers to.
enum class Criterion {
  Discounted,  // (1-gamma)-normalized discounted cost from the initial distribution
  Average,     // stationary average cost per step
};

inline const char* to_string(Criterion c) {
  return c == Criterion::Discounted ? "discounted" : "average";
}

// Absolute tolerance for "is a probability distribution" checks.
inline constexpr double kProbTol = 1e-12;

/// Formats with 17 significant digits, the precision used by every file we write.
std::string format_double(double v);

}  // namespace mixopt
