#include "wattcast/traffic.hpp"

#include "wattcast/errors.hpp"

namespace wattcast {

namespace {

using u64 = std::uint64_t;

u64 ceil_div(u64 a, u64 b) { return (a + b - 1) / b; }

} // namespace

TrafficBreakdown gemm_traffic(const OperatorSpec &op, const TileConfig &tile) {
  const auto &g = op.gemm();
  const u64 e = bytes_per_element(op.precision);
  const u64 bm = tile.tb_tile[0], bn = tile.tb_tile[1], bk = tile.tb_tile[2];
  const u64 wm = tile.warp_grid[0], wn = tile.warp_grid[1];
  const u64 mt = ceil_div(g.m, bm), nt = ceil_div(g.n, bn), t = ceil_div(g.k, bk);
  const u64 grid = static_cast<u64>(g.b) * mt * nt;

  TrafficBreakdown tb;
  // Every K-step each threadblock pulls its A and B tiles through the L2.
  tb.l2_load = grid * t * (bm + bn) * bk * e;
  // DRAM sees each distinct padded operand tile once.
  tb.dram_load = static_cast<u64>(g.b) * ((mt * bm) * (t * bk) + (t * bk) * (nt * bn)) * e;
  tb.shared_store = tb.l2_load;
  // Each warp column re-reads the A tile, each warp row the B tile.
  tb.shared_load = grid * t * bk * (bm * wn + bn * wm) * e;
  tb.dram_store = static_cast<u64>(g.b) * g.m * g.n * e;
  tb.l2_store = tb.dram_store;
  if (tile.epilogue_via_shared) {
    tb.shared_store += grid * bm * bn * e;
    tb.shared_load += grid * bm * bn * e;
  }
  return tb;
}

TrafficBreakdown reduction_traffic(const OperatorSpec &op, const TileConfig &tile) {
  (void)tile;
  const auto &r = op.reduction();
  const u64 e = bytes_per_element(op.precision);
  const u64 bytes = static_cast<u64>(r.rows) * r.cols * e;
  const u64 k_reuse = op.kind == OpKind::Softmax ? 2 : 1;

  TrafficBreakdown tb;
  tb.dram_load = bytes;
  tb.l2_load = bytes;
  tb.shared_store = bytes;
  tb.shared_load = k_reuse * bytes;
  tb.dram_store = bytes;
  tb.l2_store = bytes;
  return tb;
}

TrafficBreakdown flashattention_traffic(const OperatorSpec &op, const TileConfig &tile) {
  const auto &f = op.flash_attention();
  const u64 e = bytes_per_element(op.precision);
  const u64 bq = tile.tb_tile[0], bk = tile.tb_tile[1];
  const u64 wm = tile.warp_grid[0], wn = tile.warp_grid[1];
  const u64 d = f.head_dim;
  const u64 tq = ceil_div(f.q_len, bq), tk = ceil_div(f.kv_len, bk);
  const u64 bh = static_cast<u64>(f.b) * f.heads;
  const u64 grid = bh * tq;

  TrafficBreakdown tb;
  // Per threadblock: its Q tile once, then one K and one V tile per step.
  tb.l2_load = bh * tq * (bq * d + tk * 2 * bk * d) * e;
  // Q tiles are private; K/V tiles are shared by the Tq threadblocks of a
  // batch-head and leave DRAM once.
  tb.dram_load = bh * ((tq * bq) * d + 2 * (tk * bk) * d) * e;
  tb.shared_store = tb.l2_load;
  // Shared re-reads follow the warp tiling of the two inner matmul steps:
  // (Bq x d) @ (d x Bk), then (Bq x Bk) @ (Bk x d).
  tb.shared_load = grid * tk * (d * (bq * wn + bk * wm) + bk * (bq * wn + d * wm)) * e;
  tb.dram_store = bh * static_cast<u64>(f.q_len) * d * e;
  tb.l2_store = tb.dram_store;
  if (tile.epilogue_via_shared) {
    tb.shared_store += grid * bq * d * e;
    tb.shared_load += grid * bq * d * e;
  }
  return tb;
}

TrafficBreakdown elementwise_traffic(const OperatorSpec &op, const TileConfig &tile) {
  (void)tile;
  const auto &ew = op.elementwise();
  const u64 e = bytes_per_element(op.precision);

  TrafficBreakdown tb;
  tb.dram_load = static_cast<u64>(ew.inputs) * ew.n * e;
  tb.l2_load = tb.dram_load;
  tb.dram_store = static_cast<u64>(ew.outputs) * ew.n * e;
  tb.l2_store = tb.dram_store;
  return tb;
}

TrafficBreakdown traffic(const OperatorSpec &op, const TileConfig &tile) {
  op.validate();
  tile.validate();
  switch (op.kind) {
  case OpKind::Gemm: return gemm_traffic(op, tile);
  case OpKind::Softmax:
  case OpKind::LayerNorm: return reduction_traffic(op, tile);
  case OpKind::Elementwise: return elementwise_traffic(op, tile);
  case OpKind::FlashAttention: return flashattention_traffic(op, tile);
  }
  throw InputError("traffic: unknown operator kind");
}

} // namespace wattcast
