#include "wattcast/timeline.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>

#include "wattcast/errors.hpp"
#include "wattcast/traffic.hpp"

namespace wattcast {

namespace {

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

double map_value(const std::map<Precision, double> &m, Precision p) {
  auto it = m.find(p);
  return it == m.end() ? 0.0 : it->second;
}

Module compute_engine(Precision p) {
  // bf16 matmuls run on Tensor Cores, fp32 matmuls on CUDA cores.
  return p == Precision::bf16 ? Module::TensorCore : Module::CudaCore;
}

int phase_slot(Phase phase) {
  return phase == Phase::Monolithic ? static_cast<int>(Phase::Mainloop)
                                    : static_cast<int>(phase);
}

/// Builder state shared by the per-kind timeline constructors.
struct TimelineBuilder {
  PhaseTimeline pt;
  ModuleArray thr{};

  TimelineBuilder(const OperatorSpec &op, const TileConfig &tile, const GpuConfig &gpu,
                  const PowerConfig &power) {
    op.validate();
    tile.validate();
    const EffectiveThroughputs eff = scaled_throughputs(gpu, power);
    pt.dist = distribute(threadblock_grid(op, tile), gpu, tile.concurrent_tbs_per_sm);
    pt.precision = op.precision;
    thr = per_tb_throughputs(eff, ResourceShare{pt.dist.active_sms(), pt.dist.concurrent_tbs},
                             op.precision);
  }

  /// Latency of one action; accumulates its module times `count` times into
  /// the phase's active map and records it for the trace.
  double add(const Action &action, std::int64_t count) {
    const ActionCost cost = action_latency(action, thr);
    auto &slot = pt.active[phase_slot(action.phase)];
    for (int m = 0; m < kModuleCount; ++m)
      slot[m] += cost.module_time[m] * static_cast<double>(count);
    if (count > 0) pt.per_tb_actions.push_back({action, count});
    return cost.latency;
  }
};

Action make_action(ActionLabel label, Phase phase,
                   std::initializer_list<std::pair<Module, double>> work) {
  Action a{label, phase, {}};
  for (const auto &[m, w] : work) at(a.work, m) += w;
  return a;
}

bool engages_nothing(const Action &a) {
  for (double w : a.work)
    if (w > 0) return false;
  return true;
}

} // namespace

const char *to_string(ActionLabel label) {
  switch (label) {
  case ActionLabel::GlobalToShared: return "G->S";
  case ActionLabel::SharedToRegister: return "S->R";
  case ActionLabel::RegisterToShared: return "R->S";
  case ActionLabel::SharedToGlobal: return "S->G";
  case ActionLabel::GlobalToRegister: return "G->R";
  case ActionLabel::RegisterToGlobal: return "R->G";
  case ActionLabel::TensorMma: return "TC-MMA";
  case ActionLabel::CudaFma: return "CUDA-FMA";
  case ActionLabel::SfuOp: return "SFU";
  }
  return "?";
}

ModuleArray per_tb_throughputs(const EffectiveThroughputs &eff, const ResourceShare &share,
                               Precision precision) {
  if (share.active_sms < 1 || share.concurrent_tbs < 1)
    throw InputError("per_tb_throughputs: share counts must be >= 1");
  const double device_tbs = static_cast<double>(share.active_sms) * share.concurrent_tbs;
  ModuleArray thr{};
  at(thr, Module::Dram) = eff.dram_bandwidth / device_tbs;
  at(thr, Module::L2) = eff.l2_bandwidth / device_tbs;
  at(thr, Module::Shared) = eff.shared_bandwidth_per_sm / share.concurrent_tbs;
  // Per-SM share of device-wide compute, split among concurrent TBs.
  const double sm_tbs = static_cast<double>(eff.num_sms) * share.concurrent_tbs;
  at(thr, Module::TensorCore) = map_value(eff.tensor_core_flops, precision) / sm_tbs;
  at(thr, Module::CudaCore) = map_value(eff.cuda_core_flops, precision) / sm_tbs;
  at(thr, Module::Sfu) = eff.sfu_ops / sm_tbs;
  return thr;
}

ActionCost action_latency(const Action &action, const ModuleArray &tb_throughput) {
  ActionCost cost;
  for (int m = 0; m < kModuleCount; ++m) {
    if (action.work[m] <= 0) continue;
    if (tb_throughput[m] <= 0)
      throw ConfigError(std::string("action ") + to_string(action.label) +
                        " engages module with zero throughput: " +
                        to_string(static_cast<Module>(m)));
    cost.module_time[m] = action.work[m] / tb_throughput[m];
    cost.latency = std::max(cost.latency, cost.module_time[m]);
  }
  return cost;
}

ActionCost action_latency(const Action &action, const EffectiveThroughputs &eff,
                          const ResourceShare &share, Precision precision) {
  return action_latency(action, per_tb_throughputs(eff, share, precision));
}

double PhaseTimeline::total_active(Module m) const {
  double sum = 0.0;
  for (const auto &phase : active) sum += at(phase, m);
  return sum * static_cast<double>(dist.waves);
}

PhaseTimeline build_gemm_timeline(const OperatorSpec &op, const TileConfig &tile,
                                  const GpuConfig &gpu, const PowerConfig &power) {
  TimelineBuilder b(op, tile, gpu, power);
  const auto &g = op.gemm();
  const double e = bytes_per_element(op.precision);
  const double bm = static_cast<double>(tile.tb_tile[0]);
  const double bn = static_cast<double>(tile.tb_tile[1]);
  const double bk = static_cast<double>(tile.tb_tile[2]);
  const double wm = tile.warp_grid[0], wn = tile.warp_grid[1];
  const std::int64_t steps = ceil_div(g.k, tile.tb_tile[2]);
  const double grid = static_cast<double>(b.pt.dist.total_tbs);
  const TrafficBreakdown tr = gemm_traffic(op, tile);
  const Module engine = compute_engine(op.precision);
  const ActionLabel mma_label =
      engine == Module::TensorCore ? ActionLabel::TensorMma : ActionLabel::CudaFma;

  // One K-step's tile movement; DRAM carries the amortized cold share.
  const double gs_bytes = (bm + bn) * bk * e;
  const double gs_dram = static_cast<double>(tr.dram_load) / (grid * static_cast<double>(steps));
  const std::int64_t fill = std::max(1, tile.pipeline_stages - 1);

  const Action gs_pro = make_action(ActionLabel::GlobalToShared, Phase::Prologue,
                                    {{Module::Dram, gs_dram}, {Module::L2, gs_bytes},
                                     {Module::Shared, gs_bytes}});
  const Action gs_main = make_action(ActionLabel::GlobalToShared, Phase::Mainloop,
                                     {{Module::Dram, gs_dram}, {Module::L2, gs_bytes},
                                      {Module::Shared, gs_bytes}});
  const Action sr = make_action(ActionLabel::SharedToRegister, Phase::Mainloop,
                                {{Module::Shared, bk * (bm * wn + bn * wm) * e}});
  const Action mma = make_action(mma_label, Phase::Mainloop, {{engine, 2.0 * bm * bn * bk}});

  const double t_gs = b.add(gs_pro, fill) /* same action latency as mainloop loads */;
  b.pt.t_p = static_cast<double>(fill) * t_gs;

  const double t_gs_main = b.add(gs_main, steps);
  const double t_sr = b.add(sr, steps);
  const double t_mma = b.add(mma, steps);
  // S-stage pipelining hides one G->S load behind S-1 iterations of inner work.
  b.pt.t_m = static_cast<double>(steps) *
             std::max({t_gs_main / static_cast<double>(fill), t_sr, t_mma});

  const double store_bytes = static_cast<double>(tr.dram_store) / grid;
  if (tile.epilogue_via_shared) {
    const Action rs = make_action(ActionLabel::RegisterToShared, Phase::Epilogue,
                                  {{Module::Shared, bm * bn * e}});
    const Action sg = make_action(ActionLabel::SharedToGlobal, Phase::Epilogue,
                                  {{Module::Shared, bm * bn * e}, {Module::L2, store_bytes},
                                   {Module::Dram, store_bytes}});
    b.pt.t_e = b.add(rs, 1) + b.add(sg, 1);
  } else {
    const Action rg = make_action(ActionLabel::RegisterToGlobal, Phase::Epilogue,
                                  {{Module::L2, store_bytes}, {Module::Dram, store_bytes}});
    b.pt.t_e = b.add(rg, 1);
  }
  return b.pt;
}

PhaseTimeline build_reduction_timeline(const OperatorSpec &op, const TileConfig &tile,
                                       const GpuConfig &gpu, const PowerConfig &power) {
  TimelineBuilder b(op, tile, gpu, power);
  const auto &r = op.reduction();
  const double e = bytes_per_element(op.precision);
  const double cols = static_cast<double>(r.cols);
  const double row_bytes = cols * e;
  b.pt.monolithic = true;

  // A step's overlapped actions expose only the slowest one.
  auto step = [&](std::initializer_list<Action> actions) {
    double exposed = 0.0;
    for (const Action &a : actions) {
      if (engages_nothing(a)) continue;
      exposed = std::max(exposed, b.add(a, 1));
    }
    return exposed;
  };

  const Action load = make_action(ActionLabel::GlobalToRegister, Phase::Monolithic,
                                  {{Module::Dram, row_bytes}, {Module::L2, row_bytes}});
  const Action stage = make_action(ActionLabel::RegisterToShared, Phase::Monolithic,
                                   {{Module::Shared, row_bytes}});
  const Action reread = make_action(ActionLabel::SharedToRegister, Phase::Monolithic,
                                    {{Module::Shared, row_bytes}});
  const Action store = make_action(ActionLabel::RegisterToGlobal, Phase::Monolithic,
                                   {{Module::Dram, row_bytes}, {Module::L2, row_bytes}});

  double total = 0.0;
  if (op.kind == OpKind::Softmax) {
    const Action expo = make_action(ActionLabel::SfuOp, Phase::Monolithic, {{Module::Sfu, cols}});
    const Action acc = make_action(ActionLabel::CudaFma, Phase::Monolithic, {{Module::CudaCore, cols}});
    total += step({load, stage});              // row max while staging to shared
    total += step({reread, expo, acc});        // sum of exponentials
    total += step({reread, expo, acc, store}); // normalize and write out
  } else {
    // LayerNorm folds mean/variance into the staging pass; one shared re-read.
    const Action moments = make_action(ActionLabel::CudaFma, Phase::Monolithic,
                                       {{Module::CudaCore, 2.0 * cols}});
    const Action normalize = make_action(ActionLabel::CudaFma, Phase::Monolithic,
                                         {{Module::CudaCore, 2.0 * cols}});
    total += step({load, stage, moments});
    total += step({reread, normalize, store});
  }
  b.pt.t_m = total;
  return b.pt;
}

PhaseTimeline build_flashattention_timeline(const OperatorSpec &op, const TileConfig &tile,
                                            const GpuConfig &gpu, const PowerConfig &power) {
  TimelineBuilder b(op, tile, gpu, power);
  const auto &f = op.flash_attention();
  const double e = bytes_per_element(op.precision);
  const double bq = static_cast<double>(tile.tb_tile[0]);
  const double bkv = static_cast<double>(tile.tb_tile[1]);
  const double wm = tile.warp_grid[0], wn = tile.warp_grid[1];
  const double d = static_cast<double>(f.head_dim);
  const std::int64_t tq = ceil_div(f.q_len, tile.tb_tile[0]);
  const std::int64_t tk = ceil_div(f.kv_len, tile.tb_tile[1]);
  const double grid = static_cast<double>(b.pt.dist.total_tbs);
  const TrafficBreakdown tr = flashattention_traffic(op, tile);
  const Module engine = compute_engine(op.precision);
  const ActionLabel mma_label =
      engine == Module::TensorCore ? ActionLabel::TensorMma : ActionLabel::CudaFma;

  // K/V tiles are reused by the Tq threadblocks of a batch-head, so each
  // threadblock's cold share is 1/Tq of a tile pair.
  const double kv_bytes = 2.0 * bkv * d * e;
  const double kv_dram = kv_bytes / static_cast<double>(tq);

  const Action q_load = make_action(ActionLabel::GlobalToShared, Phase::Prologue,
                                    {{Module::Dram, bq * d * e}, {Module::L2, bq * d * e},
                                     {Module::Shared, bq * d * e}});
  const Action k_first = make_action(ActionLabel::GlobalToShared, Phase::Prologue,
                                     {{Module::Dram, bkv * d * e / static_cast<double>(tq)},
                                      {Module::L2, bkv * d * e}, {Module::Shared, bkv * d * e}});
  b.pt.t_p = b.add(q_load, 1) + b.add(k_first, 1);

  const Action kv_load = make_action(ActionLabel::GlobalToShared, Phase::Mainloop,
                                     {{Module::Dram, kv_dram}, {Module::L2, kv_bytes},
                                      {Module::Shared, kv_bytes}});
  // scores = Q @ K^T, with the shared re-reads of that matmul's warp tiling.
  const Action mma1 = make_action(mma_label, Phase::Mainloop,
                                  {{engine, 2.0 * bq * bkv * d},
                                   {Module::Shared, d * (bq * wn + bkv * wm) * e}});
  // Online softmax: exponentials on the SFU; max/sum/rescale on CUDA cores.
  const Action softmax = make_action(ActionLabel::SfuOp, Phase::Mainloop,
                                     {{Module::Sfu, bq * bkv},
                                      {Module::CudaCore, 3.0 * bq * bkv + 2.0 * bq * d}});
  // out += P @ V.
  const Action mma2 = make_action(mma_label, Phase::Mainloop,
                                  {{engine, 2.0 * bq * bkv * d},
                                   {Module::Shared, bkv * (bq * wn + d * wm) * e}});

  const double t_kv = b.add(kv_load, tk);
  const double t_inner = b.add(mma1, tk) + b.add(softmax, tk) + b.add(mma2, tk);
  // K/V double-buffering hides the load behind the three compute steps.
  b.pt.t_m = static_cast<double>(tk) * std::max(t_kv, t_inner);

  const double store_bytes = static_cast<double>(tr.dram_store) / grid;
  if (tile.epilogue_via_shared) {
    const Action rs = make_action(ActionLabel::RegisterToShared, Phase::Epilogue,
                                  {{Module::Shared, bq * d * e}});
    const Action sg = make_action(ActionLabel::SharedToGlobal, Phase::Epilogue,
                                  {{Module::Shared, bq * d * e}, {Module::L2, store_bytes},
                                   {Module::Dram, store_bytes}});
    b.pt.t_e = b.add(rs, 1) + b.add(sg, 1);
  } else {
    const Action rg = make_action(ActionLabel::RegisterToGlobal, Phase::Epilogue,
                                  {{Module::L2, store_bytes}, {Module::Dram, store_bytes}});
    b.pt.t_e = b.add(rg, 1);
  }
  return b.pt;
}

PhaseTimeline build_elementwise_timeline(const OperatorSpec &op, const TileConfig &tile,
                                         const GpuConfig &gpu, const PowerConfig &power) {
  TimelineBuilder b(op, tile, gpu, power);
  const auto &ew = op.elementwise();
  const double e = bytes_per_element(op.precision);
  const double per_tb = static_cast<double>(tile.tb_tile[0]);
  const double grid = static_cast<double>(b.pt.dist.total_tbs);
  const TrafficBreakdown tr = elementwise_traffic(op, tile);
  b.pt.monolithic = true;

  const Action load = make_action(ActionLabel::GlobalToRegister, Phase::Monolithic,
                                  {{Module::Dram, static_cast<double>(tr.dram_load) / grid},
                                   {Module::L2, ew.inputs * per_tb * e}});
  const Module math = ew.uses_sfu ? Module::Sfu : Module::CudaCore;
  const Action compute = make_action(ew.uses_sfu ? ActionLabel::SfuOp : ActionLabel::CudaFma,
                                     Phase::Monolithic, {{math, ew.flops_per_element * per_tb}});
  const Action store = make_action(ActionLabel::RegisterToGlobal, Phase::Monolithic,
                                   {{Module::Dram, static_cast<double>(tr.dram_store) / grid},
                                    {Module::L2, ew.outputs * per_tb * e}});

  double exposed = 0.0;
  for (const Action &a : {load, compute, store}) {
    if (engages_nothing(a)) continue;
    exposed = std::max(exposed, b.add(a, 1));
  }
  b.pt.t_m = exposed;
  if (b.pt.t_m <= 0)
    throw InputError("elementwise timeline: kernel engages no module (zero work everywhere)");
  return b.pt;
}

PhaseTimeline build_timeline(const OperatorSpec &op, const TileConfig &tile, const GpuConfig &gpu,
                             const PowerConfig &power) {
  switch (op.kind) {
  case OpKind::Gemm: return build_gemm_timeline(op, tile, gpu, power);
  case OpKind::Softmax:
  case OpKind::LayerNorm: return build_reduction_timeline(op, tile, gpu, power);
  case OpKind::Elementwise: return build_elementwise_timeline(op, tile, gpu, power);
  case OpKind::FlashAttention: return build_flashattention_timeline(op, tile, gpu, power);
  }
  throw InputError("build_timeline: unknown operator kind");
}

DeviceAggregate device_aggregate(const PhaseTimeline &pt) {
  const double latency = pt.ideal_latency();
  if (!(latency > 0)) throw InputError("device_aggregate: kernel has zero ideal latency");

  // Lazy SMs run proportionally fewer threadblocks; their active time shrinks
  // by the same ratio while the kernel-total latency stays the denominator.
  const double lazy_ratio =
      pt.dist.tbs_on_busy > 0
          ? static_cast<double>(pt.dist.tbs_on_lazy) / static_cast<double>(pt.dist.tbs_on_busy)
          : 0.0;
  const double num_sms = pt.dist.busy_sms + pt.dist.lazy_sms;

  DeviceAggregate agg;
  agg.ideal_latency = latency;
  ModuleArray alpha{};
  for (int m = 0; m < kModuleCount; ++m) {
    const double busy_alpha = pt.total_active(static_cast<Module>(m)) / latency;
    const double lazy_alpha = busy_alpha * lazy_ratio;
    double a = (pt.dist.busy_sms * busy_alpha + pt.dist.lazy_sms * lazy_alpha) / num_sms;
    alpha[m] = std::clamp(a, 0.0, 1.0);
  }
  agg.ideal_utilization = Utilization{alpha};
  return agg;
}

void dump_trace(std::ostream &os, const PhaseTimeline &pt, const EffectiveThroughputs &eff) {
  const ModuleArray thr = per_tb_throughputs(
      eff, ResourceShare{pt.dist.active_sms(), pt.dist.concurrent_tbs}, pt.precision);
  os << "# waves=" << pt.dist.waves << " busy=" << pt.dist.busy_sms << "x" << pt.dist.tbs_on_busy
     << " lazy=" << pt.dist.lazy_sms << "x" << pt.dist.tbs_on_lazy
     << " t_p=" << pt.t_p << " t_m=" << pt.t_m << " t_e=" << pt.t_e << "\n";
  const char *phase_names[] = {"prologue", "mainloop", "epilogue", "monolithic"};
  for (const TracedAction &ta : pt.per_tb_actions) {
    const ActionCost cost = action_latency(ta.action, thr);
    os << phase_names[static_cast<int>(ta.action.phase)] << ' ' << to_string(ta.action.label)
       << " x" << ta.count;
    for (int m = 0; m < kModuleCount; ++m)
      if (ta.action.work[m] > 0)
        os << ' ' << to_string(static_cast<Module>(m)) << '=' << cost.module_time[m];
    os << " latency=" << cost.latency << "\n";
  }
}

} // namespace wattcast
