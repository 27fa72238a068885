#ifndef WATTCAST_TESTS_TEST_GPU_HPP
#define WATTCAST_TESTS_TEST_GPU_HPP

#include "wattcast/hw.hpp"

namespace wattcast::testing {

/// A100-PCIE-like device used across tests. Values are chosen to be
/// representative, not to match any vendor sheet; tests only rely on the
/// relations between them.
inline GpuConfig test_gpu() {
  GpuConfig g;
  g.name = "test-a100";
  g.num_sms = 108;
  g.smsps_per_sm = 4;
  g.max_concurrent_tbs_per_sm_default = 1;
  g.dram_bandwidth = 1555e9;
  g.l2_bandwidth = 4830e9;
  g.shared_bandwidth_per_sm = 178e9;
  g.tensor_core_flops = {{Precision::bf16, 312e12}, {Precision::fp32, 19.5e12}};
  g.cuda_core_flops = {{Precision::bf16, 39e12}, {Precision::fp32, 19.5e12}};
  g.sfu_ops = 2.4e12;
  g.reference_core_freq = 1410e6;
  g.dram_freq = 1215e6;
  g.dram_voltage = 1.2;
  return g;
}

inline PowerConfig test_power(double core_freq = 1410e6) {
  PowerConfig p;
  p.core_freq = core_freq;
  p.core_voltage = 1.0;
  p.idle_power_table = {{210e6, 35.0}, {510e6, 38.0}, {900e6, 44.0}, {1410e6, 55.0}};
  p.vf_curve = {{510e6, 0.70}, {1410e6, 1.00}};
  return p;
}

/// Derate to values where compute or L2 dominates (DRAM effectively free).
inline GpuConfig fast_dram_gpu() {
  GpuConfig g = test_gpu();
  g.dram_bandwidth = 1e18;
  return g;
}

} // namespace wattcast::testing

#endif // WATTCAST_TESTS_TEST_GPU_HPP
