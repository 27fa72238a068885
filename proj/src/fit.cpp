#include "wattcast/fit.hpp"

#include <algorithm>
#include <chrono>
#include <ctime>
#include <exception>
#include <map>
#include <sstream>

#include "wattcast/errors.hpp"
#include "wattcast/timeline.hpp"

namespace wattcast {

namespace {

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

PowerConfig power_config_for(const GpuDocument &doc, double core_freq) {
  PowerConfig pc = doc.power;
  pc.core_freq = core_freq;
  pc.core_voltage = voltage_at(doc.power, core_freq);
  return pc;
}

struct GroupFitOutcome {
  KernelGroupKey key;
  bool latency_ok = false;
  CoeffStore::LatencyEntry latency_entry;
  bool power_ok = false;
  CoeffStore::PowerEntry power_entry;
  std::vector<std::string> warnings;
};

GroupFitOutcome fit_group(const KernelGroupKey &key, const RecordGroup &group,
                          const GpuDocument &doc, const std::string &stamp) {
  GroupFitOutcome out;
  out.key = key;

  std::vector<PhaseTimeline> timelines;
  std::vector<LatencySample> samples;
  timelines.reserve(group.records.size());
  for (size_t i = 0; i < group.records.size(); ++i) {
    const MeasurementRecord &r = *group.records[i];
    const PowerConfig pc = power_config_for(doc, r.core_freq);
    timelines.push_back(build_timeline(r.op, group.tiles[i], doc.gpu, pc));
    samples.push_back(LatencySample::from_timeline(timelines.back(), r.latency));
  }

  CorrectionCoeffs lambda; // identity unless the fit succeeds
  try {
    const LatencyFit fit = fit_latency_coeffs(samples);
    lambda = fit.coeffs;
    out.latency_ok = true;
    out.latency_entry.coeffs = fit.coeffs;
    out.latency_entry.sample_count = fit.sample_count;
    out.latency_entry.rmse = fit.rmse;
    out.latency_entry.fitted_at = stamp;
    out.latency_entry.notes = fit.fixed_columns;
    for (const auto &w : fit.warnings) out.warnings.push_back(key.to_string() + ": " + w);
  } catch (const FitError &e) {
    out.warnings.push_back(key.to_string() + ": " + e.what());
  }

  std::vector<PowerSample> power_samples;
  for (size_t i = 0; i < group.records.size(); ++i) {
    const MeasurementRecord &r = *group.records[i];
    if (!r.power) continue;
    const PowerConfig pc = power_config_for(doc, r.core_freq);
    PowerSample s;
    s.utilization = corrected_aggregate(timelines[i], lambda).utilization;
    s.core_freq = pc.core_freq;
    s.core_voltage = pc.core_voltage;
    s.dram_freq = doc.gpu.dram_freq;
    s.dram_voltage = doc.gpu.dram_voltage;
    s.dram_energy_scale = pc.dram_energy_scale;
    s.measured_power = *r.power;
    s.idle_power = r.idle_power ? *r.idle_power : idle_power_at(pc, pc.core_freq);
    power_samples.push_back(std::move(s));
  }
  if (!power_samples.empty()) {
    try {
      const PowerFit fit = fit_power_coeffs(power_samples);
      out.power_ok = true;
      out.power_entry.coeffs = fit.coeffs;
      out.power_entry.sample_count = fit.sample_count;
      out.power_entry.rmse = fit.rmse;
      out.power_entry.distinct_frequencies = fit.distinct_frequencies;
      out.power_entry.fitted_at = stamp;
      for (const auto &merged : fit.merged_columns) {
        std::string note = "merged:";
        for (Module m : merged) note += std::string(" ") + to_string(m);
        out.power_entry.notes.push_back(note);
      }
      for (const auto &w : fit.warnings) out.warnings.push_back(key.to_string() + ": " + w);
    } catch (const FitError &e) {
      out.warnings.push_back(key.to_string() + ": " + e.what());
    }
  }
  return out;
}

} // namespace

FitReport fit_from_records(const std::vector<MeasurementRecord> &records, const GpuDocument &doc,
                           const FitOptions &options) {
  FitReport report;

  std::vector<MeasurementRecord> mine;
  for (const MeasurementRecord &r : records) {
    if (r.gpu_name == doc.gpu.name) {
      mine.push_back(r);
    } else {
      ++report.records_foreign_gpu;
    }
  }
  report.records_used = static_cast<int>(mine.size());
  if (report.records_foreign_gpu > 0) {
    std::ostringstream os;
    os << "skipped " << report.records_foreign_gpu << " records measured on a different gpu than "
       << doc.gpu.name;
    report.warnings.push_back(os.str());
  }
  if (mine.empty()) throw FitError("fit: no records for gpu " + doc.gpu.name);

  const ConfigPredictor empty;
  const GroupReport grouped = group_records(mine, empty, doc.gpu);

  // Observed warp/concurrency per group, by majority vote over the columns.
  for (const auto &[key, group] : grouped.groups) {
    std::map<std::pair<std::array<int, 2>, int>, int> votes;
    for (const TileConfig &tile : group.tiles)
      ++votes[{tile.warp_grid, tile.concurrent_tbs_per_sm}];
    const auto best = std::max_element(votes.begin(), votes.end(),
                                       [](const auto &a, const auto &b) { return a.second < b.second; });
    report.store.predictor.add_tile_details(key, {best->first.first, best->first.second});
  }

  const std::string stamp = utc_now();
  std::vector<const std::pair<const KernelGroupKey, RecordGroup> *> group_list;
  for (const auto &entry : grouped.groups) group_list.push_back(&entry);

  std::vector<GroupFitOutcome> outcomes(group_list.size());
  std::exception_ptr first_error;
#pragma omp parallel for schedule(dynamic) if (options.parallel)
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(group_list.size()); ++i) {
    try {
      outcomes[static_cast<size_t>(i)] =
          fit_group(group_list[static_cast<size_t>(i)]->first,
                    group_list[static_cast<size_t>(i)]->second, doc, stamp);
    } catch (...) {
#pragma omp critical
      if (!first_error) first_error = std::current_exception();
    }
  }
  if (first_error) std::rethrow_exception(first_error);

  for (GroupFitOutcome &o : outcomes) {
    if (o.latency_ok) {
      report.store.latency[o.key] = std::move(o.latency_entry);
      ++report.latency_groups;
    } else {
      ++report.latency_skipped;
    }
    if (o.power_ok) {
      report.store.power[o.key] = std::move(o.power_entry);
      ++report.power_groups;
    } else {
      ++report.power_skipped;
    }
    for (auto &w : o.warnings) report.warnings.push_back(std::move(w));
  }

  // Config predictor: one tree per matmul family and precision.
  std::map<std::pair<int, int>, std::pair<std::vector<ConfigSample>, std::vector<TileConfig>>>
      tree_data;
  for (const auto &[key, group] : grouped.groups) {
    if (key.kind != OpKind::Gemm && key.kind != OpKind::FlashAttention) continue;
    auto &[samples, labels] = tree_data[{static_cast<int>(key.kind), static_cast<int>(key.precision)}];
    for (size_t i = 0; i < group.records.size(); ++i) {
      const TileConfig &tile = group.tiles[i];
      int label = -1;
      for (size_t j = 0; j < labels.size(); ++j)
        if (labels[j] == tile) label = static_cast<int>(j);
      if (label < 0) {
        labels.push_back(tile);
        label = static_cast<int>(labels.size()) - 1;
      }
      ConfigSample s;
      s.features = shape_features(group.records[i]->op);
      s.label = label;
      tree_data[{static_cast<int>(key.kind), static_cast<int>(key.precision)}].first.push_back(
          std::move(s));
    }
  }
  for (auto &[kp, data] : tree_data) {
    auto &[samples, labels] = data;
    if (samples.size() < 2) continue;
    const TrainResult trained = train_config_predictor(samples, options.tree_params);
    report.store.predictor.add_tree(static_cast<OpKind>(kp.first),
                                    static_cast<Precision>(kp.second), trained.tree, labels);
  }
  return report;
}

} // namespace wattcast
