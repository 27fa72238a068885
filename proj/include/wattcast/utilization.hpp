#ifndef WATTCAST_UTILIZATION_HPP
#define WATTCAST_UTILIZATION_HPP

#include "wattcast/types.hpp"

namespace wattcast {

/// Activity factors for the six modeled modules, each in [0, 1].
struct Utilization {
  ModuleArray alpha{};

  double operator[](Module m) const { return at(alpha, m); }

  /// Validates bounds. Values above 1 by less than 1e-6 are clamped (the
  /// warning is reported through `clamped`); larger excursions are an error.
  static Utilization checked(const ModuleArray &raw, int *clamped = nullptr);
};

} // namespace wattcast

#endif // WATTCAST_UTILIZATION_HPP
