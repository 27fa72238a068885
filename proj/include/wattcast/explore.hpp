#ifndef WATTCAST_EXPLORE_HPP
#define WATTCAST_EXPLORE_HPP

#include "wattcast/engine.hpp"

namespace wattcast {

struct DvfsPoint {
  double core_freq = 0.0;    // Hz
  double core_voltage = 0.0; // V used at this point
  WorkloadResult result;
};

/// Re-predicts the workload across operating points: voltage from the V(f)
/// curve (or a fixed override), idle power re-looked-up, on-chip throughputs
/// rescaled. No refitting.
std::vector<DvfsPoint> explore_dvfs(const Workload &w, const GpuDocument &doc,
                                    const CoeffStore &store, const std::vector<double> &core_freqs,
                                    std::optional<double> voltage_override = {},
                                    const EngineOptions &options = {});

/// Same coefficients, different hardware description.
WorkloadResult explore_arch(const Workload &w, const GpuDocument &variant, const CoeffStore &store,
                            const EngineOptions &options = {});

struct ComparisonReport {
  WorkloadResult base;
  WorkloadResult variant;
  double speedup = 0.0;      // base latency / variant latency
  double power_ratio = 0.0;  // variant avg power / base avg power
  double energy_ratio = 0.0; // variant energy / base energy
};

ComparisonReport compare_variants(const Workload &base, const Workload &variant,
                                  const GpuDocument &doc, const CoeffStore &store,
                                  const EngineOptions &options = {});

} // namespace wattcast

#endif // WATTCAST_EXPLORE_HPP
