#include "wattcast/synth.hpp"

#include <random>

#include "wattcast/errors.hpp"
#include "wattcast/timeline.hpp"

namespace wattcast {

namespace {

PowerCoeffs make_coeffs(double dram, double l2, double shared, double tensor, double cuda,
                        double sfu) {
  PowerCoeffs c;
  c.c = {dram, l2, shared, tensor, cuda, sfu};
  return c;
}

CorrectionCoeffs make_lambda(double p, double m, double e, double eps) {
  CorrectionCoeffs c;
  c.lambda_p = p;
  c.lambda_m = m;
  c.lambda_e = e;
  c.epsilon = eps;
  return c;
}

/// Shape samplers, biased toward small and skewed kernels: sub-device grids
/// separate the phase columns and small kernels expose epsilon.
OperatorSpec sample_shape(const SynthGroupSpec &spec, std::mt19937_64 &rng) {
  auto pick = [&](std::int64_t lo, std::int64_t hi) {
    return std::uniform_int_distribution<std::int64_t>(lo, hi)(rng);
  };
  switch (spec.kind) {
  case OpKind::Gemm: {
    const auto em = std::min(pick(0, 5), pick(0, 5));
    const auto en = std::min(pick(0, 5), pick(0, 5));
    const std::int64_t m = std::max<std::int64_t>(1, (128LL << em) - pick(0, 127));
    const std::int64_t n = std::max<std::int64_t>(1, (128LL << en) - pick(0, 127));
    const std::int64_t k = std::max<std::int64_t>(1, (32LL << pick(0, 5)) - pick(0, 31));
    return OperatorSpec::make_gemm(spec.precision, pick(1, 4), m, n, k);
  }
  case OpKind::Softmax:
  case OpKind::LayerNorm: {
    const std::int64_t rows = std::max<std::int64_t>(1, (1LL << pick(5, 13)) - pick(0, 31));
    const std::int64_t cols = (1024LL << pick(0, 3)) + pick(0, 512);
    return spec.kind == OpKind::Softmax
               ? OperatorSpec::make_softmax(spec.precision, rows, cols)
               : OperatorSpec::make_layernorm(spec.precision, rows, cols);
  }
  case OpKind::Elementwise: {
    const std::int64_t n = std::max<std::int64_t>(1, (1LL << pick(14, 24)) - pick(0, 999));
    return OperatorSpec::make_elementwise(spec.precision, n, static_cast<int>(pick(1, 2)), 1,
                                          static_cast<double>(pick(1, 8)), false);
  }
  case OpKind::FlashAttention: {
    const std::int64_t b = 1LL << pick(0, 3);
    const std::int64_t heads = 4 * pick(2, 4);
    const std::int64_t sq =
        std::max<std::int64_t>(1, (128LL << std::min(pick(0, 4), pick(0, 4))) - pick(0, 127));
    const std::int64_t sk = std::max<std::int64_t>(1, (64LL << pick(0, 5)) - pick(0, 63));
    // two head dims give the tensor-vs-shared activity contrast without
    // drowning the phase columns in a common scale factor
    const std::int64_t d = pick(0, 1) ? 64 : 128;
    return OperatorSpec::make_flash_attention(spec.precision, b, heads, sq, sk, d);
  }
  }
  throw InputError("sample_shape: unknown kind");
}

} // namespace

// Hidden power coefficients follow an identifiability convention: modules
// whose activities are structurally proportional within a kernel family
// (softmax and layernorm run every step at a fixed work ratio; the three
// FlashAttention inner-loop engines are coplanar for a fixed tile) cannot be
// told apart by any fit on that family, so their hidden truths either share
// one value (reductions, recovered through the merge rule) or concentrate on
// the tensor pipe (FlashAttention, where non-negativity pins the unique
// representation).
std::vector<SynthGroupSpec> default_synth_groups() {
  std::vector<SynthGroupSpec> groups;
  groups.push_back({"tc-gemm-128", OpKind::Gemm, Precision::bf16,
                    "ampere_bf16_s16816gemm_bf16_128x128_ldg8_f2f_stages_32x3_nn", 128, 1,
                    make_lambda(1.25, 1.12, 1.42, 2.5e-6),
                    make_coeffs(3.1e-8, 0.9e-8, 0.7e-8, 8.5e-8, 0.0, 0.0)});
  groups.push_back({"tc-gemm-256", OpKind::Gemm, Precision::bf16,
                    "cutlass_80_tensorop_s16816gemm_bf16_256x128_64x3_tn_align8", 256, 1,
                    make_lambda(1.18, 1.08, 1.35, 1.8e-6),
                    make_coeffs(3.0e-8, 1.0e-8, 0.8e-8, 9.0e-8, 0.0, 0.0)});
  groups.push_back({"tc-gemm-64", OpKind::Gemm, Precision::bf16,
                    "ampere_bf16_s16816gemm_bf16_64x64_ldg8_f2f_stages_64x5_nn", 128, 2,
                    make_lambda(1.35, 1.20, 1.50, 3.0e-6),
                    make_coeffs(3.2e-8, 0.8e-8, 0.6e-8, 7.5e-8, 0.0, 0.0)});
  // sgemm's single-tile prologue fill is ~1.5% of kernel time: invisible to
  // the fit, which holds lambda_p at the default.
  groups.push_back({"simt-sgemm", OpKind::Gemm, Precision::fp32, "ampere_sgemm_128x64_nn", 128, 1,
                    make_lambda(1.0, 1.15, 1.45, 2.0e-6),
                    make_coeffs(3.3e-8, 1.1e-8, 0.9e-8, 0.0, 6.0e-8, 0.0)});
  // reductions: alpha_L2 tracks alpha_DRAM up to the frequency scale, so the
  // memory-side truth concentrates in the DRAM domain.
  groups.push_back({"softmax", OpKind::Softmax, Precision::fp32, "cunn_SoftMaxForwardSmem", 128, 2,
                    make_lambda(1.0, 1.30, 1.0, 1.5e-6),
                    make_coeffs(3.3e-8, 0.0, 1.8e-8, 0.0, 1.8e-8, 1.8e-8)});
  groups.push_back({"softmax-bf16", OpKind::Softmax, Precision::bf16, "cunn_SoftMaxForwardSmem",
                    128, 2, make_lambda(1.0, 1.28, 1.0, 1.4e-6),
                    make_coeffs(3.2e-8, 0.0, 1.6e-8, 0.0, 1.6e-8, 1.6e-8)});
  groups.push_back({"layernorm", OpKind::LayerNorm, Precision::bf16,
                    "vectorized_layer_norm_kernel", 256, 2, make_lambda(1.0, 1.25, 1.0, 1.2e-6),
                    make_coeffs(3.2e-8, 0.0, 1.9e-8, 0.0, 1.9e-8, 0.0)});
  groups.push_back({"elementwise-bf16", OpKind::Elementwise, Precision::bf16,
                    "vectorized_elementwise_kernel_gelu", 128, 4,
                    make_lambda(1.0, 1.15, 1.0, 0.8e-6),
                    make_coeffs(3.4e-8, 1.2e-8, 0.0, 0.0, 2.0e-8, 0.0)});
  groups.push_back({"elementwise-fp32", OpKind::Elementwise, Precision::fp32,
                    "vectorized_elementwise_kernel_add", 128, 4,
                    make_lambda(1.0, 1.18, 1.0, 0.9e-6),
                    make_coeffs(3.5e-8, 1.3e-8, 0.0, 0.0, 2.1e-8, 0.0)});
  groups.push_back({"flashattention", OpKind::FlashAttention, Precision::bf16,
                    "pytorch_flash_fwd_kernel", 128, 1, make_lambda(1.22, 1.10, 1.40, 2.2e-6),
                    make_coeffs(3.1e-8, 1.0e-8, 0.75e-8, 9.5e-8, 0.0, 0.0)});
  return groups;
}

TileConfig synth_group_tile(const SynthGroupSpec &spec, const GpuConfig &gpu) {
  OperatorSpec probe;
  probe.kind = spec.kind;
  probe.precision = spec.precision;
  switch (spec.kind) {
  case OpKind::Gemm: probe.shape = GemmShape{1, 4096, 4096, 4096}; break;
  case OpKind::Softmax:
  case OpKind::LayerNorm: probe.shape = ReductionShape{1024, 4096}; break;
  case OpKind::Elementwise: probe.shape = ElementwiseShape{1 << 20, 1, 1, 1.0, false}; break;
  case OpKind::FlashAttention: probe.shape = FlashAttentionShape{1, 8, 1024, 1024, 64}; break;
  }
  const ConfigPredictor empty;
  return resolve_tile_config(probe, spec.kernel_name, spec.block_threads, spec.concurrency, empty,
                             gpu)
      .tile;
}

std::vector<MeasurementRecord> generate_synthetic_database(
    const SynthParams &params, const GpuDocument &doc, const std::vector<SynthGroupSpec> &groups) {
  if (params.core_freqs.empty()) throw InputError("synthetic database: need >= 1 core frequency");
  std::mt19937_64 rng(params.seed);
  std::normal_distribution<double> gauss(0.0, 1.0);

  std::vector<MeasurementRecord> records;
  std::int64_t next_id = 1;
  for (const SynthGroupSpec &spec : groups) {
    const TileConfig tile = synth_group_tile(spec, doc.gpu);
    for (int i = 0; i < params.rows_per_group; ++i) {
      const OperatorSpec op = sample_shape(spec, rng);
      // noise draws happen unconditionally so sigma never shifts the stream
      const double z_latency = gauss(rng);
      const double z_power = gauss(rng);

      PowerConfig pc = doc.power;
      pc.core_freq = params.core_freqs[static_cast<size_t>(i) % params.core_freqs.size()];
      pc.core_voltage = voltage_at(doc.power, pc.core_freq);

      const PhaseTimeline pt = build_timeline(op, tile, doc.gpu, pc);
      const CorrectedAggregate agg = corrected_aggregate(pt, spec.latency_truth);
      const double dyn = dynamic_power(agg.utilization, spec.power_truth, doc.gpu, pc);
      const double idle = idle_power_at(pc, pc.core_freq);

      MeasurementRecord r;
      r.id = next_id++;
      r.gpu_name = doc.gpu.name;
      r.op = op;
      r.kernel_name = spec.kernel_name;
      r.grid = {pt.dist.total_tbs, 1, 1};
      r.block_threads = spec.block_threads;
      r.concurrency = spec.concurrency;
      r.core_freq = pc.core_freq;
      r.latency = agg.latency * (1.0 + params.noise_sigma * z_latency);
      r.power = idle + dyn * (1.0 + params.noise_sigma * z_power);
      r.idle_power = idle;
      records.push_back(std::move(r));
    }
  }
  return records;
}

} // namespace wattcast
