#include "wattcast/kernels.hpp"

#include <sstream>

#include "wattcast/errors.hpp"

namespace wattcast {

namespace {

std::int64_t ceil_div(std::int64_t a, std::int64_t b) { return (a + b - 1) / b; }

void require(bool ok, const std::string &msg) {
  if (!ok) throw InputError(msg);
}

} // namespace

const char *to_string(OpKind k) {
  switch (k) {
  case OpKind::Gemm: return "gemm";
  case OpKind::Softmax: return "softmax";
  case OpKind::LayerNorm: return "layernorm";
  case OpKind::Elementwise: return "elementwise";
  case OpKind::FlashAttention: return "flashattention";
  }
  return "?";
}

OpKind op_kind_from_string(const std::string &s) {
  if (s == "gemm") return OpKind::Gemm;
  if (s == "softmax") return OpKind::Softmax;
  if (s == "layernorm") return OpKind::LayerNorm;
  if (s == "elementwise") return OpKind::Elementwise;
  if (s == "flashattention") return OpKind::FlashAttention;
  throw InputError("unknown operator kind '" + s + "'");
}

void OperatorSpec::validate() const {
  switch (kind) {
  case OpKind::Gemm: {
    const auto &g = gemm();
    require(g.b >= 1 && g.m >= 1 && g.n >= 1 && g.k >= 1, "gemm: all dimensions must be >= 1");
    break;
  }
  case OpKind::Softmax:
  case OpKind::LayerNorm: {
    const auto &r = reduction();
    require(r.rows >= 1 && r.cols >= 1, "reduction: rows and cols must be >= 1");
    break;
  }
  case OpKind::Elementwise: {
    const auto &e = elementwise();
    require(e.n >= 1, "elementwise: element count must be >= 1");
    require(e.inputs >= 0 && e.outputs >= 0, "elementwise: inputs/outputs must be >= 0");
    require(e.flops_per_element >= 0, "elementwise: flops_per_element must be >= 0");
    break;
  }
  case OpKind::FlashAttention: {
    const auto &f = flash_attention();
    require(f.b >= 1 && f.heads >= 1 && f.q_len >= 1 && f.kv_len >= 1 && f.head_dim >= 1,
            "flashattention: all dimensions must be >= 1");
    break;
  }
  }
}

OperatorSpec OperatorSpec::make_gemm(Precision p, std::int64_t b, std::int64_t m, std::int64_t n,
                                     std::int64_t k) {
  OperatorSpec op{OpKind::Gemm, p, GemmShape{b, m, n, k}};
  op.validate();
  return op;
}

OperatorSpec OperatorSpec::make_softmax(Precision p, std::int64_t rows, std::int64_t cols) {
  OperatorSpec op{OpKind::Softmax, p, ReductionShape{rows, cols}};
  op.validate();
  return op;
}

OperatorSpec OperatorSpec::make_layernorm(Precision p, std::int64_t rows, std::int64_t cols) {
  OperatorSpec op{OpKind::LayerNorm, p, ReductionShape{rows, cols}};
  op.validate();
  return op;
}

OperatorSpec OperatorSpec::make_elementwise(Precision p, std::int64_t n, int inputs, int outputs,
                                            double flops_per_element, bool uses_sfu) {
  OperatorSpec op{OpKind::Elementwise, p, ElementwiseShape{n, inputs, outputs, flops_per_element, uses_sfu}};
  op.validate();
  return op;
}

OperatorSpec OperatorSpec::make_flash_attention(Precision p, std::int64_t b, std::int64_t heads,
                                                std::int64_t q_len, std::int64_t kv_len,
                                                std::int64_t head_dim) {
  OperatorSpec op{OpKind::FlashAttention, p, FlashAttentionShape{b, heads, q_len, kv_len, head_dim}};
  op.validate();
  return op;
}

void TileConfig::validate() const {
  require(tb_tile[0] >= 1, "tile: leading threadblock tile dim must be >= 1");
  require(pipeline_stages >= 1, "tile: pipeline_stages must be >= 1");
  require(concurrent_tbs_per_sm >= 1, "tile: concurrent_tbs_per_sm must be >= 1");
  require(warp_grid[0] >= 1 && warp_grid[1] >= 1, "tile: warp_grid entries must be >= 1");
}

std::string KernelGroupKey::to_string() const {
  std::ostringstream os;
  os << wattcast::to_string(kind) << '|' << wattcast::to_string(precision) << '|' << tb_tile[0]
     << 'x' << tb_tile[1] << 'x' << tb_tile[2] << "|s" << pipeline_stages << '|'
     << (epilogue_via_shared ? "epi1" : "epi0");
  return os.str();
}

KernelGroupKey group_key(const OperatorSpec &op, const TileConfig &tile) {
  KernelGroupKey key;
  key.kind = op.kind;
  key.precision = op.precision;
  key.tb_tile = tile.tb_tile;
  switch (op.kind) {
  case OpKind::Gemm:
    break;
  case OpKind::FlashAttention:
    key.tb_tile[2] = 0;
    break;
  default:
    key.tb_tile[1] = 0;
    key.tb_tile[2] = 0;
    break;
  }
  key.pipeline_stages = tile.pipeline_stages;
  key.epilogue_via_shared = tile.epilogue_via_shared;
  return key;
}

std::int64_t threadblock_grid(const OperatorSpec &op, const TileConfig &tile) {
  op.validate();
  tile.validate();
  switch (op.kind) {
  case OpKind::Gemm: {
    const auto &g = op.gemm();
    return g.b * ceil_div(g.m, tile.tb_tile[0]) * ceil_div(g.n, tile.tb_tile[1]);
  }
  case OpKind::Softmax:
  case OpKind::LayerNorm:
    return op.reduction().rows; // one threadblock per row
  case OpKind::Elementwise:
    return ceil_div(op.elementwise().n, tile.tb_tile[0]);
  case OpKind::FlashAttention: {
    const auto &f = op.flash_attention();
    return f.b * f.heads * ceil_div(f.q_len, tile.tb_tile[0]);
  }
  }
  return 0;
}

Distribution distribute(std::int64_t grid, const GpuConfig &gpu, int concurrent_tbs_per_sm) {
  require(grid >= 1, "distribute: grid must be >= 1");
  require(concurrent_tbs_per_sm >= 1, "distribute: concurrency must be >= 1");
  const std::int64_t sms = gpu.num_sms;
  Distribution d;
  d.total_tbs = grid;
  d.concurrent_tbs = concurrent_tbs_per_sm;
  d.tbs_on_busy = ceil_div(grid, sms);
  d.tbs_on_lazy = grid / sms;
  const std::int64_t rem = grid % sms;
  d.busy_sms = static_cast<int>(rem != 0 ? rem : sms);
  d.lazy_sms = static_cast<int>(sms - d.busy_sms);
  d.waves = ceil_div(d.tbs_on_busy, concurrent_tbs_per_sm);
  return d;
}

} // namespace wattcast
