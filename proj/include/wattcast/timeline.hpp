#ifndef WATTCAST_TIMELINE_HPP
#define WATTCAST_TIMELINE_HPP

#include <iosfwd>
#include <vector>

#include "wattcast/kernels.hpp"
#include "wattcast/utilization.hpp"

namespace wattcast {

enum class ActionLabel {
  GlobalToShared,    // G->S
  SharedToRegister,  // S->R
  RegisterToShared,  // R->S
  SharedToGlobal,    // S->G
  GlobalToRegister,  // G->R
  RegisterToGlobal,  // R->G
  TensorMma,
  CudaFma,
  SfuOp,
};

const char *to_string(ActionLabel label);

enum class Phase { Prologue = 0, Mainloop = 1, Epilogue = 2, Monolithic };

/// One coarse-grained step of a threadblock's timeline: how much work it
/// puts on each module. Zero work means the module is not engaged.
struct Action {
  ActionLabel label;
  Phase phase;
  ModuleArray work{}; // bytes for memory modules, FLOPs/ops for compute
};

/// How device resources are split for one threadblock: per-SM resources
/// among the concurrent threadblocks of its SM, device-wide resources
/// (DRAM, L2) among every concurrently executing threadblock.
struct ResourceShare {
  int active_sms = 1;
  int concurrent_tbs = 1;
};

/// Throughput available to a single threadblock, per module.
ModuleArray per_tb_throughputs(const EffectiveThroughputs &eff, const ResourceShare &share,
                               Precision precision);

struct ActionCost {
  double latency = 0.0;      // max over engaged modules
  ModuleArray module_time{}; // each engaged module's own time
};

/// Eq-of-work rule: each engaged module takes work / (throughput share);
/// the action is as slow as its slowest participant.
ActionCost action_latency(const Action &action, const ModuleArray &tb_throughput);
ActionCost action_latency(const Action &action, const EffectiveThroughputs &eff,
                          const ResourceShare &share, Precision precision);

/// An action plus how often one threadblock performs it.
struct TracedAction {
  Action action;
  std::int64_t count = 1;
};

/// Ideal per-kernel execution scaffold: phase latencies for one wave on a
/// busy SM, plus per-phase module active times (pre-correction).
struct PhaseTimeline {
  double t_p = 0.0, t_m = 0.0, t_e = 0.0; // seconds per wave
  bool monolithic = false;                // reductions/elementwise: t_m only
  // active[phase][module], seconds per wave on a busy SM
  std::array<ModuleArray, 3> active{};
  Distribution dist;
  Precision precision = Precision::bf16;
  std::vector<TracedAction> per_tb_actions; // for inspection and traces

  double wave_time() const { return t_p + t_m + t_e; }
  double total_prologue() const { return static_cast<double>(dist.waves) * t_p; }
  double total_mainloop() const { return static_cast<double>(dist.waves) * t_m; }
  double total_epilogue() const { return static_cast<double>(dist.waves) * t_e; }
  double ideal_latency() const { return static_cast<double>(dist.waves) * wave_time(); }
  /// Kernel-total active time of a module on a busy SM (all phases).
  double total_active(Module m) const;
};

PhaseTimeline build_gemm_timeline(const OperatorSpec &op, const TileConfig &tile,
                                  const GpuConfig &gpu, const PowerConfig &power);
PhaseTimeline build_reduction_timeline(const OperatorSpec &op, const TileConfig &tile,
                                       const GpuConfig &gpu, const PowerConfig &power);
PhaseTimeline build_flashattention_timeline(const OperatorSpec &op, const TileConfig &tile,
                                            const GpuConfig &gpu, const PowerConfig &power);
PhaseTimeline build_elementwise_timeline(const OperatorSpec &op, const TileConfig &tile,
                                         const GpuConfig &gpu, const PowerConfig &power);

/// Dispatch on kind.
PhaseTimeline build_timeline(const OperatorSpec &op, const TileConfig &tile, const GpuConfig &gpu,
                             const PowerConfig &power);

struct DeviceAggregate {
  double ideal_latency = 0.0;
  Utilization ideal_utilization;
};

/// Busy-SM timeline gives the latency; utilization is the busy/lazy-weighted
/// average (lazy SMs scale with their smaller threadblock count), using the
/// kernel's total latency as the common denominator, clamped to [0, 1].
DeviceAggregate device_aggregate(const PhaseTimeline &pt);

/// Debug trace: one line per action with its per-module times.
void dump_trace(std::ostream &os, const PhaseTimeline &pt, const EffectiveThroughputs &eff);

} // namespace wattcast

#endif // WATTCAST_TIMELINE_HPP
