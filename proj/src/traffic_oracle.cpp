#include <vector>

#include "wattcast/errors.hpp"
#include "wattcast/traffic.hpp"

// Brute-force replay of the tile schedule. Deliberately written as plain
// loops over threadblocks, iterations and warps so that the closed forms in
// traffic.cpp are checked by an independent accumulation path.

namespace wattcast {

namespace {

using u64 = std::uint64_t;

u64 ceil_div(u64 a, u64 b) { return (a + b - 1) / b; }

struct Budget {
  u64 left;
  void spend(u64 n) {
    if (n > left) throw OracleBudgetError("traffic oracle: enumeration exceeds work budget");
    left -= n;
  }
};

// Loaded-once tracking per operand tensor, indexed linearly by tile id.
struct ColdSet {
  std::vector<bool> seen;
  explicit ColdSet(u64 n) : seen(n, false) {}
  bool first_touch(u64 id) {
    if (seen[id]) return false;
    seen[id] = true;
    return true;
  }
};

TrafficBreakdown oracle_gemm(const OperatorSpec &op, const TileConfig &tile, Budget &budget) {
  const auto &g = op.gemm();
  const u64 e = bytes_per_element(op.precision);
  const u64 bm = tile.tb_tile[0], bn = tile.tb_tile[1], bk = tile.tb_tile[2];
  const u64 wm = tile.warp_grid[0], wn = tile.warp_grid[1];
  const u64 mt = ceil_div(g.m, bm), nt = ceil_div(g.n, bn), steps = ceil_div(g.k, bk);
  const u64 batches = g.b;

  budget.spend(batches * mt * nt * steps * (2 + wm + wn));

  ColdSet a_tiles(batches * mt * steps);
  ColdSet b_tiles(batches * steps * nt);
  TrafficBreakdown out;

  for (u64 b = 0; b < batches; ++b) {
    for (u64 im = 0; im < mt; ++im) {
      for (u64 in = 0; in < nt; ++in) {
        for (u64 t = 0; t < steps; ++t) {
          const u64 a_bytes = bm * bk * e;
          const u64 b_bytes = bk * bn * e;
          if (a_tiles.first_touch((b * mt + im) * steps + t)) out.dram_load += a_bytes;
          if (b_tiles.first_touch((b * steps + t) * nt + in)) out.dram_load += b_bytes;
          out.l2_load += a_bytes + b_bytes;
          out.shared_store += a_bytes + b_bytes;
          for (u64 wc = 0; wc < wn; ++wc) out.shared_load += bm * bk * e;
          for (u64 wr = 0; wr < wm; ++wr) out.shared_load += bk * bn * e;
        }
        const u64 rows = std::min(bm, static_cast<u64>(g.m) - im * bm);
        const u64 cols = std::min(bn, static_cast<u64>(g.n) - in * bn);
        out.dram_store += rows * cols * e;
        out.l2_store += rows * cols * e;
        if (tile.epilogue_via_shared) {
          out.shared_store += bm * bn * e;
          out.shared_load += bm * bn * e;
        }
      }
    }
  }
  return out;
}

TrafficBreakdown oracle_flashattention(const OperatorSpec &op, const TileConfig &tile,
                                       Budget &budget) {
  const auto &f = op.flash_attention();
  const u64 e = bytes_per_element(op.precision);
  const u64 bq = tile.tb_tile[0], bkv = tile.tb_tile[1];
  const u64 wm = tile.warp_grid[0], wn = tile.warp_grid[1];
  const u64 d = f.head_dim;
  const u64 tq = ceil_div(f.q_len, bq), tk = ceil_div(f.kv_len, bkv);
  const u64 bh = static_cast<u64>(f.b) * f.heads;

  budget.spend(bh * tq * tk * (2 + 2 * (wm + wn)));

  ColdSet k_tiles(bh * tk);
  ColdSet v_tiles(bh * tk);
  TrafficBreakdown out;

  for (u64 g = 0; g < bh; ++g) {
    for (u64 qt = 0; qt < tq; ++qt) {
      // Q tile is private to this threadblock: always a cold load.
      out.dram_load += bq * d * e;
      out.l2_load += bq * d * e;
      out.shared_store += bq * d * e;
      for (u64 kt = 0; kt < tk; ++kt) {
        const u64 kv_bytes = bkv * d * e;
        if (k_tiles.first_touch(g * tk + kt)) out.dram_load += kv_bytes;
        if (v_tiles.first_touch(g * tk + kt)) out.dram_load += kv_bytes;
        out.l2_load += 2 * kv_bytes;
        out.shared_store += 2 * kv_bytes;
        // Step 1: scores = Q (Bq x d) @ K^T (d x Bk).
        for (u64 wc = 0; wc < wn; ++wc) out.shared_load += bq * d * e;
        for (u64 wr = 0; wr < wm; ++wr) out.shared_load += d * bkv * e;
        // Step 2: output += P (Bq x Bk) @ V (Bk x d).
        for (u64 wc = 0; wc < wn; ++wc) out.shared_load += bq * bkv * e;
        for (u64 wr = 0; wr < wm; ++wr) out.shared_load += bkv * d * e;
      }
      const u64 rows = std::min(bq, static_cast<u64>(f.q_len) - qt * bq);
      out.dram_store += rows * d * e;
      out.l2_store += rows * d * e;
      if (tile.epilogue_via_shared) {
        out.shared_store += bq * d * e;
        out.shared_load += bq * d * e;
      }
    }
  }
  return out;
}

TrafficBreakdown oracle_reduction(const OperatorSpec &op, Budget &budget) {
  const auto &r = op.reduction();
  const u64 e = bytes_per_element(op.precision);
  const u64 rows = r.rows, cols = r.cols;
  const u64 k_reuse = op.kind == OpKind::Softmax ? 2 : 1;

  budget.spend(rows * (3 + k_reuse));

  TrafficBreakdown out;
  for (u64 row = 0; row < rows; ++row) {
    // Rows are private to their threadblock: every load is cold.
    out.dram_load += cols * e;
    out.l2_load += cols * e;
    out.shared_store += cols * e;
    for (u64 pass = 0; pass < k_reuse; ++pass) out.shared_load += cols * e;
    out.dram_store += cols * e;
    out.l2_store += cols * e;
  }
  return out;
}

TrafficBreakdown oracle_elementwise(const OperatorSpec &op, const TileConfig &tile,
                                    Budget &budget) {
  const auto &ew = op.elementwise();
  const u64 e = bytes_per_element(op.precision);
  const u64 etb = tile.tb_tile[0];
  const u64 grid = ceil_div(ew.n, etb);

  budget.spend(grid * (1 + ew.inputs + ew.outputs));

  TrafficBreakdown out;
  for (u64 g = 0; g < grid; ++g) {
    const u64 elems = std::min(etb, static_cast<u64>(ew.n) - g * etb);
    for (int i = 0; i < ew.inputs; ++i) {
      out.dram_load += elems * e;
      out.l2_load += elems * e;
    }
    for (int o = 0; o < ew.outputs; ++o) {
      out.dram_store += elems * e;
      out.l2_store += elems * e;
    }
  }
  return out;
}

} // namespace

TrafficBreakdown oracle_traffic(const OperatorSpec &op, const TileConfig &tile, u64 max_steps) {
  op.validate();
  tile.validate();
  Budget budget{max_steps};
  switch (op.kind) {
  case OpKind::Gemm: return oracle_gemm(op, tile, budget);
  case OpKind::Softmax:
  case OpKind::LayerNorm: return oracle_reduction(op, budget);
  case OpKind::Elementwise: return oracle_elementwise(op, tile, budget);
  case OpKind::FlashAttention: return oracle_flashattention(op, tile, budget);
  }
  throw InputError("oracle_traffic: unknown operator kind");
}

} // namespace wattcast
