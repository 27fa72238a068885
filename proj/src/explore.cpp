#include "wattcast/explore.hpp"

#include "wattcast/errors.hpp"

namespace wattcast {

std::vector<DvfsPoint> explore_dvfs(const Workload &w, const GpuDocument &doc,
                                    const CoeffStore &store, const std::vector<double> &core_freqs,
                                    std::optional<double> voltage_override,
                                    const EngineOptions &options) {
  if (core_freqs.empty()) throw InputError("explore-dvfs: no frequencies given");
  std::vector<DvfsPoint> points;
  for (double f : core_freqs) {
    PowerConfig pc = doc.power;
    pc.core_freq = f;
    pc.core_voltage = voltage_override ? *voltage_override : voltage_at(doc.power, f);
    DvfsPoint point;
    point.core_freq = f;
    point.core_voltage = pc.core_voltage;
    point.result = predict_workload(w, doc.gpu, pc, store, options);
    points.push_back(std::move(point));
  }
  return points;
}

WorkloadResult explore_arch(const Workload &w, const GpuDocument &variant, const CoeffStore &store,
                            const EngineOptions &options) {
  return predict_workload(w, variant.gpu, variant.power, store, options);
}

ComparisonReport compare_variants(const Workload &base, const Workload &variant,
                                  const GpuDocument &doc, const CoeffStore &store,
                                  const EngineOptions &options) {
  ComparisonReport report;
  report.base = predict_workload(base, doc.gpu, doc.power, store, options);
  report.variant = predict_workload(variant, doc.gpu, doc.power, store, options);
  report.speedup = report.base.total_latency / report.variant.total_latency;
  report.power_ratio = report.variant.average_power / report.base.average_power;
  report.energy_ratio = report.variant.total_energy / report.base.total_energy;
  return report;
}

} // namespace wattcast
