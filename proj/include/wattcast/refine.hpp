#ifndef WATTCAST_REFINE_HPP
#define WATTCAST_REFINE_HPP

#include <string>
#include <vector>

#include "wattcast/timeline.hpp"

namespace wattcast {

/// Empirical corrections on top of the ideal timeline: per-phase bandwidth
/// degradation (lambda) and a fixed per-kernel cost (epsilon, seconds).
/// Monolithic kernels use lambda_m and epsilon only.
struct CorrectionCoeffs {
  double lambda_p = 1.0;
  double lambda_m = 1.0;
  double lambda_e = 1.0;
  double epsilon = 0.0;

  void validate() const;
};

/// Kernel-scale corrected latency and per-phase module active times.
/// epsilon stretches the latency but belongs to no module.
struct CorrectedTimeline {
  double latency = 0.0;                 // seconds, kernel total
  double t_p = 0.0, t_m = 0.0, t_e = 0.0; // corrected kernel-scale phases
  std::array<ModuleArray, 3> active{};  // corrected kernel totals, busy SM
};

CorrectedTimeline correct_latency(const PhaseTimeline &pt, const CorrectionCoeffs &coeffs);

struct CorrectedAggregate {
  double latency = 0.0;
  Utilization utilization; // busy/lazy weighted, clamped to [0, 1]
  CorrectedTimeline detail;
};

/// correct_latency followed by the busy/lazy device averaging.
CorrectedAggregate corrected_aggregate(const PhaseTimeline &pt, const CorrectionCoeffs &coeffs);

/// One fitting observation: kernel-scale ideal phase latencies plus the
/// measured latency.
struct LatencySample {
  double t_p = 0.0, t_m = 0.0, t_e = 0.0;
  bool monolithic = false;
  double measured = 0.0; // seconds

  static LatencySample from_timeline(const PhaseTimeline &pt, double measured);
};

struct LatencyFit {
  CorrectionCoeffs coeffs;
  double rmse = 0.0;
  int sample_count = 0;
  std::vector<std::string> fixed_columns; // collinear columns held at default
  std::vector<std::string> warnings;
};

/// Non-negative least squares over [t_p, t_m, t_e, 1] ([t_m, 1] for
/// monolithic kernels). Rank-deficient designs drop collinear columns,
/// holding their lambda at 1 (epsilon at 0) with a warning.
/// Throws FitError when the group is under-determined.
LatencyFit fit_latency_coeffs(const std::vector<LatencySample> &samples);

} // namespace wattcast

#endif // WATTCAST_REFINE_HPP
