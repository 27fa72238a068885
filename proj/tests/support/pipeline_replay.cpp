#include "pipeline_replay.hpp"

#include <cstdint>
#include <queue>

#include "wattcast/timeline.hpp"

namespace wattcast::testing {

namespace {

using std::int64_t;

int64_t ceil_div(int64_t a, int64_t b) { return (a + b - 1) / b; }

struct Lane {
  Module module;
  double busy_per_iter; // seconds of occupancy per mainloop iteration
};

} // namespace

double replay_gemm_latency(const OperatorSpec &op, const TileConfig &tile, const GpuConfig &gpu,
                           const PowerConfig &power) {
  const auto &g = op.gemm();
  const double e = bytes_per_element(op.precision);
  const double bm = static_cast<double>(tile.tb_tile[0]);
  const double bn = static_cast<double>(tile.tb_tile[1]);
  const double bk = static_cast<double>(tile.tb_tile[2]);
  const int64_t mt = ceil_div(g.m, tile.tb_tile[0]);
  const int64_t nt = ceil_div(g.n, tile.tb_tile[1]);
  const int64_t steps = ceil_div(g.k, tile.tb_tile[2]);
  const int64_t grid = g.b * mt * nt;
  const int fill = std::max(1, tile.pipeline_stages - 1);

  const Distribution dist = distribute(grid, gpu, tile.concurrent_tbs_per_sm);
  const EffectiveThroughputs eff = scaled_throughputs(gpu, power);
  const ModuleArray thr =
      per_tb_throughputs(eff, ResourceShare{dist.active_sms(), dist.concurrent_tbs}, op.precision);

  // Work amounts rebuilt from first principles.
  const double cold_bytes =
      static_cast<double>(g.b) *
      (static_cast<double>(mt * bm) * static_cast<double>(steps) * bk +
       static_cast<double>(steps) * bk * static_cast<double>(nt * bn)) *
      e;
  const double gs_dram = cold_bytes / (static_cast<double>(grid) * static_cast<double>(steps));
  const double gs_bytes = (bm + bn) * bk * e;
  const double sr_bytes = bk * (bm * tile.warp_grid[1] + bn * tile.warp_grid[0]) * e;
  const double mma_flops = 2.0 * bm * bn * bk;
  const Module engine = op.precision == Precision::bf16 ? Module::TensorCore : Module::CudaCore;

  auto module_time = [&](Module m, double work) { return work / at(thr, m); };

  const double t_gs = std::max({module_time(Module::Dram, gs_dram),
                                module_time(Module::L2, gs_bytes),
                                module_time(Module::Shared, gs_bytes)});
  const Lane lanes[3] = {
      {Module::Dram, t_gs / static_cast<double>(fill)}, // G->S spread over S-1 slots
      {Module::Shared, module_time(Module::Shared, sr_bytes)},
      {engine, module_time(engine, mma_flops)},
  };

  double clock = 0.0;
  for (int64_t wave = 0; wave < dist.waves; ++wave) {
    // Prologue: pipeline fill, loads issue back to back.
    for (int s = 0; s < fill; ++s) clock += t_gs;

    // Mainloop: every iteration launches the three lanes concurrently and
    // completes when the last one finishes.
    for (int64_t it = 0; it < steps; ++it) {
      std::priority_queue<double> completions;
      for (const Lane &lane : lanes) completions.push(clock + lane.busy_per_iter);
      clock = completions.top(); // latest completion gates the iteration
    }

    // Epilogue store chain.
    const double store_actual =
        static_cast<double>(g.b) * static_cast<double>(g.m) * static_cast<double>(g.n) * e /
        static_cast<double>(grid);
    if (tile.epilogue_via_shared) {
      clock += module_time(Module::Shared, bm * bn * e);
      clock += std::max({module_time(Module::Shared, bm * bn * e),
                         module_time(Module::L2, store_actual),
                         module_time(Module::Dram, store_actual)});
    } else {
      clock += std::max(module_time(Module::L2, store_actual),
                        module_time(Module::Dram, store_actual));
    }
  }
  return clock;
}

} // namespace wattcast::testing
