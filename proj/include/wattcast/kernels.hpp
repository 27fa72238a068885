#ifndef WATTCAST_KERNELS_HPP
#define WATTCAST_KERNELS_HPP

#include <array>
#include <compare>
#include <cstdint>
#include <string>
#include <variant>

#include "wattcast/hw.hpp"
#include "wattcast/types.hpp"

namespace wattcast {

enum class OpKind { Gemm, Softmax, LayerNorm, Elementwise, FlashAttention };

constexpr bool is_reduction(OpKind k) {
  return k == OpKind::Softmax || k == OpKind::LayerNorm;
}

const char *to_string(OpKind k);
OpKind op_kind_from_string(const std::string &s);

struct GemmShape {
  std::int64_t b = 1, m = 1, n = 1, k = 1;
};

struct ReductionShape {
  std::int64_t rows = 1, cols = 1;
};

struct ElementwiseShape {
  std::int64_t n = 1;
  int inputs = 1, outputs = 1;
  double flops_per_element = 0.0;
  bool uses_sfu = false; // route the per-element math to the SFU
};

struct FlashAttentionShape {
  std::int64_t b = 1, heads = 1, q_len = 1, kv_len = 1, head_dim = 1;
};

/// A kernel as the model sees it: what it computes and on which tensor shapes.
struct OperatorSpec {
  OpKind kind = OpKind::Gemm;
  Precision precision = Precision::bf16;
  std::variant<GemmShape, ReductionShape, ElementwiseShape, FlashAttentionShape> shape;

  void validate() const;

  const GemmShape &gemm() const { return std::get<GemmShape>(shape); }
  const ReductionShape &reduction() const { return std::get<ReductionShape>(shape); }
  const ElementwiseShape &elementwise() const { return std::get<ElementwiseShape>(shape); }
  const FlashAttentionShape &flash_attention() const { return std::get<FlashAttentionShape>(shape); }

  static OperatorSpec make_gemm(Precision p, std::int64_t b, std::int64_t m, std::int64_t n, std::int64_t k);
  static OperatorSpec make_softmax(Precision p, std::int64_t rows, std::int64_t cols);
  static OperatorSpec make_layernorm(Precision p, std::int64_t rows, std::int64_t cols);
  static OperatorSpec make_elementwise(Precision p, std::int64_t n, int inputs, int outputs,
                                       double flops_per_element, bool uses_sfu = false);
  static OperatorSpec make_flash_attention(Precision p, std::int64_t b, std::int64_t heads,
                                           std::int64_t q_len, std::int64_t kv_len, std::int64_t head_dim);
};

/// A kernel's optimization choice: tiling, pipelining, epilogue staging and
/// the occupancy it achieved (concurrent threadblocks per SM).
///
/// tb_tile meaning by kind: (BM, BN, BK) for GEMM; (Bq, Bk, 0) for
/// FlashAttention; (elements_per_tb, 0, 0) for Reduction/Elementwise.
struct TileConfig {
  std::array<std::int64_t, 3> tb_tile{128, 128, 32};
  std::array<int, 2> warp_grid{2, 2};   // warps along M and N in a threadblock
  std::array<int, 3> instr_tile{16, 8, 16};
  int pipeline_stages = 1;              // S = 1 means no pipelining
  bool epilogue_via_shared = false;
  int concurrent_tbs_per_sm = 1;

  bool operator==(const TileConfig &) const = default;
  void validate() const;
};

/// Identity under which kernels share fitted coefficients.
struct KernelGroupKey {
  OpKind kind = OpKind::Gemm;
  Precision precision = Precision::bf16;
  std::array<std::int64_t, 3> tb_tile{0, 0, 0};
  int pipeline_stages = 1;
  bool epilogue_via_shared = false;

  auto operator<=>(const KernelGroupKey &) const = default;
  std::string to_string() const;
};

KernelGroupKey group_key(const OperatorSpec &op, const TileConfig &tile);

/// Total threadblock count launched for a kernel.
std::int64_t threadblock_grid(const OperatorSpec &op, const TileConfig &tile);

/// How a grid lands on the SMs. When counts do not divide evenly, "busy" SMs
/// carry one extra threadblock and the rest are "lazy".
struct Distribution {
  std::int64_t total_tbs = 0;
  std::int64_t waves = 0;        // rounds of concurrent execution on a busy SM
  int busy_sms = 0;
  int lazy_sms = 0;
  std::int64_t tbs_on_busy = 0;  // threadblocks assigned to each busy SM
  std::int64_t tbs_on_lazy = 0;
  int concurrent_tbs = 1;

  /// SMs with at least one threadblock.
  int active_sms() const { return busy_sms + (tbs_on_lazy > 0 ? lazy_sms : 0); }
};

Distribution distribute(std::int64_t grid, const GpuConfig &gpu, int concurrent_tbs_per_sm);

} // namespace wattcast

#endif // WATTCAST_KERNELS_HPP
