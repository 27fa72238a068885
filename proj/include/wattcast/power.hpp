#ifndef WATTCAST_POWER_HPP
#define WATTCAST_POWER_HPP

#include <string>
#include <vector>

#include "wattcast/hw.hpp"
#include "wattcast/utilization.hpp"

namespace wattcast {

/// Hardware-specific dynamic-power parameters, W / (V^2 * Hz).
/// c[Dram] pairs with the DRAM voltage/frequency domain, the others with the
/// core domain.
struct PowerCoeffs {
  ModuleArray c{};

  void validate() const;
};

/// alpha * C * V^2 * f summed over modules; DRAM uses its own domain and the
/// optional user-supplied energy scale.
double dynamic_power(const Utilization &u, const PowerCoeffs &coeffs, const GpuConfig &gpu,
                     const PowerConfig &power);

struct TotalPower {
  double dynamic = 0.0;
  double idle = 0.0;
  double total = 0.0;
};

TotalPower total_power(const Utilization &u, const PowerCoeffs &coeffs, const GpuConfig &gpu,
                       const PowerConfig &power);

/// One power-fitting observation.
struct PowerSample {
  Utilization utilization;    // lambda-corrected activity factors
  double core_freq = 0.0;     // Hz
  double core_voltage = 0.0;  // V
  double dram_freq = 0.0;     // Hz
  double dram_voltage = 0.0;  // V
  double dram_energy_scale = 1.0;
  double measured_power = 0.0; // total watts
  double idle_power = 0.0;     // watts at core_freq
};

struct PowerFit {
  PowerCoeffs coeffs;
  double rmse = 0.0;
  int sample_count = 0;
  int distinct_frequencies = 0;
  std::vector<std::vector<Module>> merged_columns; // collinear groups sharing one C
  std::vector<std::string> warnings;
};

/// Non-negative least squares on [alpha_D*Vd^2*fd, alpha_m*V^2*f ...] against
/// measured - idle. Collinear columns are merged into one coefficient;
/// all-zero columns fit to zero. Throws FitError below 7 samples.
PowerFit fit_power_coeffs(const std::vector<PowerSample> &samples);

/// Everything the model predicts for one kernel.
struct PredictionResult {
  double latency = 0.0;       // s, corrected (plus any launch overhead)
  double dynamic_power = 0.0; // W
  double idle_power = 0.0;    // W
  double total_power = 0.0;   // W
  double energy = 0.0;        // J = total_power * latency
  Utilization utilization;
  double t_p = 0.0, t_m = 0.0, t_e = 0.0; // corrected phase breakdown, s
};

} // namespace wattcast

#endif // WATTCAST_POWER_HPP
