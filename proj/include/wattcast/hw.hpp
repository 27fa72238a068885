#ifndef WATTCAST_HW_HPP
#define WATTCAST_HW_HPP

#include <map>
#include <string>
#include <utility>
#include <vector>

#include "wattcast/types.hpp"

namespace wattcast {

/// GPU architecture descriptor. Throughputs are device totals quoted at
/// reference_core_freq, except dram_bandwidth (DRAM's own clock domain) and
/// shared_bandwidth_per_sm (per SM).
struct GpuConfig {
  std::string name;
  int num_sms = 0;
  int smsps_per_sm = 4;
  int max_concurrent_tbs_per_sm_default = 1;
  double dram_bandwidth = 0.0;          // bytes/s, device total
  double l2_bandwidth = 0.0;            // bytes/s, device total at ref freq
  double shared_bandwidth_per_sm = 0.0; // bytes/s, per SM at ref freq
  std::map<Precision, double> tensor_core_flops; // FLOP/s, device total at ref freq
  std::map<Precision, double> cuda_core_flops;   // FLOP/s, device total at ref freq
  double sfu_ops = 0.0;                 // op/s, device total at ref freq
  double reference_core_freq = 0.0;     // Hz
  double dram_freq = 0.0;               // Hz
  double dram_voltage = 0.0;            // V
  std::vector<std::string> notes;       // provenance of non-datasheet numbers

  void validate() const;
};

/// Voltage/frequency operating point plus the measured idle-power table.
struct PowerConfig {
  double core_freq = 0.0;    // Hz
  double core_voltage = 0.0; // V
  std::vector<std::pair<double, double>> idle_power_table; // (Hz, W), freq increasing
  std::vector<std::pair<double, double>> vf_curve;         // optional (Hz, V)
  double dram_energy_scale = 1.0; // optional multiplier for non-HBM memories

  void validate() const;
};

/// Module throughputs at a concrete operating point. On-chip entries are
/// scaled by core_freq / reference_core_freq; DRAM keeps its own domain.
struct EffectiveThroughputs {
  double dram_bandwidth = 0.0;          // bytes/s, device
  double l2_bandwidth = 0.0;            // bytes/s, device
  double shared_bandwidth_per_sm = 0.0; // bytes/s, per SM
  std::map<Precision, double> tensor_core_flops; // device
  std::map<Precision, double> cuda_core_flops;   // device
  double sfu_ops = 0.0;                 // device
  int num_sms = 0;
};

EffectiveThroughputs scaled_throughputs(const GpuConfig &gpu, const PowerConfig &power);

/// Linear interpolation in the idle-power table; exact at table points.
/// A single-entry table answers every frequency with its value.
/// Throws InputError when freq falls outside the table range.
double idle_power_at(const PowerConfig &power, double freq);

/// Voltage at a frequency: interpolated from vf_curve when present
/// (clamped at the curve ends), otherwise core_voltage.
double voltage_at(const PowerConfig &power, double freq);

/// One human-editable document per GPU: architecture plus power section.
struct GpuDocument {
  GpuConfig gpu;
  PowerConfig power;
};

GpuDocument load_gpu_document(const std::string &path);
std::string gpu_document_to_json(const GpuDocument &doc);
GpuDocument gpu_document_from_json(const std::string &json_text);
void save_gpu_document(const std::string &path, const GpuDocument &doc);

} // namespace wattcast

#endif // WATTCAST_HW_HPP
