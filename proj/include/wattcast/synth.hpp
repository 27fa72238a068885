#ifndef WATTCAST_SYNTH_HPP
#define WATTCAST_SYNTH_HPP

#include <cstdint>

#include "wattcast/db.hpp"
#include "wattcast/power.hpp"
#include "wattcast/refine.hpp"

namespace wattcast {

/// Ground truth for one synthetic kernel group: a real-looking kernel name
/// (resolution of that name defines the group's tile) plus hidden
/// correction and power coefficients the fits must recover.
struct SynthGroupSpec {
  std::string label;
  OpKind kind = OpKind::Gemm;
  Precision precision = Precision::bf16;
  std::string kernel_name;
  int block_threads = 128;
  int concurrency = 1;
  CorrectionCoeffs latency_truth;
  PowerCoeffs power_truth;
};

struct SynthParams {
  std::uint64_t seed = 1;
  int rows_per_group = 120;
  double noise_sigma = 0.02; // multiplicative Gaussian on latency and dynamic power
  std::vector<double> core_freqs = {510e6, 810e6, 1110e6, 1410e6};
};

/// The groups used by the synthetic fixtures: four GEMM variants, both
/// reductions, elementwise in both precisions, and FlashAttention (the one
/// family that exercises all six modules).
std::vector<SynthGroupSpec> default_synth_groups();

/// Deterministic for a fixed seed. Latency, power and utilization come from
/// the analytic model with the hidden coefficients; noise is multiplicative
/// Gaussian on the latency and on the dynamic-power residual.
std::vector<MeasurementRecord> generate_synthetic_database(const SynthParams &params,
                                                           const GpuDocument &doc,
                                                           const std::vector<SynthGroupSpec> &groups);

/// The tile a group's kernel name resolves to (shared by generator and fit).
TileConfig synth_group_tile(const SynthGroupSpec &spec, const GpuConfig &gpu);

} // namespace wattcast

#endif // WATTCAST_SYNTH_HPP
