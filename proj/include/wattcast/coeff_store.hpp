#ifndef WATTCAST_COEFF_STORE_HPP
#define WATTCAST_COEFF_STORE_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wattcast/frontend.hpp"
#include "wattcast/kernels.hpp"
#include "wattcast/power.hpp"
#include "wattcast/refine.hpp"

namespace wattcast {

/// Versioned on-disk bundle of everything offline training produces:
/// latency and power coefficients per kernel group, the trained config
/// predictor trees, and the observed warp/concurrency details.
class CoeffStore {
public:
  static constexpr int kFormatVersion = 1;

  struct LatencyEntry {
    CorrectionCoeffs coeffs;
    int sample_count = 0;
    double rmse = 0.0;
    std::string fitted_at; // ISO-8601 UTC
    std::vector<std::string> notes;
  };
  struct PowerEntry {
    PowerCoeffs coeffs;
    int sample_count = 0;
    double rmse = 0.0;
    int distinct_frequencies = 0;
    std::string fitted_at;
    std::vector<std::string> notes;
  };

  std::map<KernelGroupKey, LatencyEntry> latency;
  std::map<KernelGroupKey, PowerEntry> power;
  ConfigPredictor predictor;

  /// Lookup with nearest-group fallback (same kind and precision, closest
  /// tile by L1 distance over log2 tile dims). `exact` is false on fallback;
  /// `defaulted` means nothing usable existed and defaults were returned.
  struct LatencyLookup {
    CorrectionCoeffs coeffs;
    bool exact = false;
    bool defaulted = false;
    std::string source_group;
  };
  LatencyLookup lookup_latency(const KernelGroupKey &key) const;

  struct PowerLookup {
    PowerCoeffs coeffs;
    bool exact = false;
    bool defaulted = false;
    std::string source_group;
  };
  PowerLookup lookup_power(const KernelGroupKey &key) const;

  std::string to_json() const;
  static CoeffStore from_json(const std::string &text);
  static CoeffStore load(const std::string &path);
  void save(const std::string &path) const;
};

} // namespace wattcast

#endif // WATTCAST_COEFF_STORE_HPP
