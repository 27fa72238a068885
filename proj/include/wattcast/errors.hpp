#ifndef WATTCAST_ERRORS_HPP
#define WATTCAST_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace wattcast {

/// Bad user input: malformed files, invalid shapes, out-of-range queries.
/// The CLI maps this family to exit code 2.
struct InputError : std::runtime_error {
  explicit InputError(const std::string &msg) : std::runtime_error(msg) {}
};

/// Invalid hardware description (zero throughput for an engaged module, ...).
struct ConfigError : InputError {
  explicit ConfigError(const std::string &msg) : InputError(msg) {}
};

/// Coefficient fitting cannot proceed (under-determined group, ...).
/// The CLI maps this to exit code 3.
struct FitError : std::runtime_error {
  explicit FitError(const std::string &msg) : std::runtime_error(msg) {}
};

/// The brute-force traffic oracle refused a shape larger than its work budget.
struct OracleBudgetError : std::runtime_error {
  explicit OracleBudgetError(const std::string &msg) : std::runtime_error(msg) {}
};

} // namespace wattcast

#endif // WATTCAST_ERRORS_HPP
