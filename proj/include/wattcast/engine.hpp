#ifndef WATTCAST_ENGINE_HPP
#define WATTCAST_ENGINE_HPP

#include "wattcast/coeff_store.hpp"
#include "wattcast/workload.hpp"

namespace wattcast {

struct EngineOptions {
  bool allow_default_coeffs = false; // permit identity/zero coefficients
  double launch_overhead_s = 0.0;    // optional per-operator CPU-side cost
  bool parallel = true;              // operators predicted concurrently
};

/// One operator's prediction plus where its inputs came from.
struct OperatorPrediction {
  PredictionResult result;
  KernelGroupKey key;
  TileConfig tile;
  enum class TileSource { Override, Tree, Rule, Default } tile_source = TileSource::Default;
  bool latency_exact = false, latency_fallback = false, latency_default = false;
  bool power_exact = false, power_fallback = false, power_default = false;
  std::string latency_source, power_source;
};

struct CoverageReport {
  int tile_override = 0, tile_tree = 0, tile_rule = 0, tile_default = 0;
  int latency_exact = 0, latency_fallback = 0, latency_default = 0;
  int power_exact = 0, power_fallback = 0, power_default = 0;
};

struct WorkloadResult {
  double total_latency = 0.0; // s
  double total_energy = 0.0;  // J
  double average_power = 0.0; // W, energy / latency
  std::vector<OperatorPrediction> per_op; // one per workload entry
  CoverageReport coverage;
};

OperatorPrediction predict_operator(const OperatorSpec &op,
                                    const std::optional<TileConfig> &tile_override,
                                    const GpuConfig &gpu, const PowerConfig &power,
                                    const CoeffStore &store, const EngineOptions &options = {});

/// Sequential-execution accumulation: latencies and energies sum, average
/// power is energy over latency. Kernels are independent, so the per-entry
/// predictions may run in parallel; results assemble in input order either
/// way.
WorkloadResult predict_workload(const Workload &w, const GpuConfig &gpu, const PowerConfig &power,
                                const CoeffStore &store, const EngineOptions &options = {});

} // namespace wattcast

#endif // WATTCAST_ENGINE_HPP
