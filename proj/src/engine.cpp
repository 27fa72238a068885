#include "wattcast/engine.hpp"

#include <exception>
#include <sstream>

#include "wattcast/errors.hpp"
#include "wattcast/timeline.hpp"

namespace wattcast {

OperatorPrediction predict_operator(const OperatorSpec &op,
                                    const std::optional<TileConfig> &tile_override,
                                    const GpuConfig &gpu, const PowerConfig &power,
                                    const CoeffStore &store, const EngineOptions &options) {
  OperatorPrediction out;

  if (tile_override) {
    out.tile = *tile_override;
    out.tile_source = OperatorPrediction::TileSource::Override;
  } else {
    const TilePrediction predicted = store.predictor.predict(op, gpu);
    out.tile = predicted.tile;
    switch (predicted.source) {
    case TilePrediction::Source::Tree:
      out.tile_source = OperatorPrediction::TileSource::Tree;
      break;
    case TilePrediction::Source::Rule:
      out.tile_source = OperatorPrediction::TileSource::Rule;
      break;
    case TilePrediction::Source::Default:
      out.tile_source = OperatorPrediction::TileSource::Default;
      break;
    }
    if (predicted.source != TilePrediction::Source::Rule)
      store.predictor.apply_tile_details(op.kind, op.precision, out.tile);
  }
  out.key = group_key(op, out.tile);

  const CoeffStore::LatencyLookup lat = store.lookup_latency(out.key);
  out.latency_exact = lat.exact;
  out.latency_fallback = !lat.exact && !lat.defaulted;
  out.latency_default = lat.defaulted;
  out.latency_source = lat.source_group;
  if (lat.defaulted && !options.allow_default_coeffs)
    throw InputError("no latency coefficients for group " + out.key.to_string() +
                     " (pass --allow-defaults to predict with the ideal model)");

  const PhaseTimeline pt = build_timeline(op, out.tile, gpu, power);
  const CorrectedAggregate agg = corrected_aggregate(pt, lat.coeffs);

  const CoeffStore::PowerLookup pw = store.lookup_power(out.key);
  out.power_exact = pw.exact;
  out.power_fallback = !pw.exact && !pw.defaulted;
  out.power_default = pw.defaulted;
  out.power_source = pw.source_group;
  if (pw.defaulted && !options.allow_default_coeffs)
    throw InputError("no power coefficients for group " + out.key.to_string() +
                     " (pass --allow-defaults to report idle power only)");

  PredictionResult &r = out.result;
  r.latency = agg.latency + options.launch_overhead_s;
  r.utilization = agg.utilization;
  r.t_p = agg.detail.t_p;
  r.t_m = agg.detail.t_m;
  r.t_e = agg.detail.t_e;
  r.dynamic_power = dynamic_power(agg.utilization, pw.coeffs, gpu, power);
  r.idle_power = idle_power_at(power, power.core_freq);
  r.total_power = r.dynamic_power + r.idle_power;
  r.energy = r.total_power * r.latency;
  return out;
}

WorkloadResult predict_workload(const Workload &w, const GpuConfig &gpu, const PowerConfig &power,
                                const CoeffStore &store, const EngineOptions &options) {
  w.validate();
  gpu.validate();
  power.validate();

  WorkloadResult result;
  result.per_op.resize(w.ops.size());

  std::exception_ptr first_error;
  std::string error_context;
#pragma omp parallel for schedule(dynamic) if (options.parallel)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(w.ops.size()); ++i) {
    try {
      const WorkloadEntry &entry = w.ops[static_cast<size_t>(i)];
      result.per_op[static_cast<size_t>(i)] =
          predict_operator(entry.op, entry.tile_override, gpu, power, store, options);
    } catch (...) {
#pragma omp critical
      if (!first_error) {
        first_error = std::current_exception();
        error_context = "operator " + std::to_string(i);
      }
    }
  }
  if (first_error) {
    try {
      std::rethrow_exception(first_error);
    } catch (const std::exception &e) {
      throw InputError(w.name + ": " + error_context + ": " + e.what());
    }
  }

  // Accumulate in input order: kernels execute sequentially.
  for (size_t i = 0; i < w.ops.size(); ++i) {
    const double repeat = static_cast<double>(w.ops[i].repeat);
    const PredictionResult &r = result.per_op[i].result;
    result.total_latency += repeat * r.latency;
    result.total_energy += repeat * r.energy;

    CoverageReport &c = result.coverage;
    const OperatorPrediction &p = result.per_op[i];
    switch (p.tile_source) {
    case OperatorPrediction::TileSource::Override: ++c.tile_override; break;
    case OperatorPrediction::TileSource::Tree: ++c.tile_tree; break;
    case OperatorPrediction::TileSource::Rule: ++c.tile_rule; break;
    case OperatorPrediction::TileSource::Default: ++c.tile_default; break;
    }
    c.latency_exact += p.latency_exact;
    c.latency_fallback += p.latency_fallback;
    c.latency_default += p.latency_default;
    c.power_exact += p.power_exact;
    c.power_fallback += p.power_fallback;
    c.power_default += p.power_default;
  }
  result.average_power =
      result.total_latency > 0 ? result.total_energy / result.total_latency : 0.0;
  return result;
}

} // namespace wattcast
