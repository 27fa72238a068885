#ifndef WATTCAST_FIT_HPP
#define WATTCAST_FIT_HPP

#include "wattcast/coeff_store.hpp"
#include "wattcast/db.hpp"
#include "wattcast/hw.hpp"

namespace wattcast {

struct FitOptions {
  TreeParams tree_params;
  bool parallel = true; // fit independent groups concurrently
};

struct FitReport {
  CoeffStore store;
  int records_used = 0;
  int records_foreign_gpu = 0; // records whose gpu name did not match
  int latency_groups = 0;
  int latency_skipped = 0; // under-determined groups (fall back at lookup)
  int power_groups = 0;
  int power_skipped = 0;
  std::vector<std::string> warnings;
};

/// Offline training: resolves tiles, groups records, fits lambda/epsilon and
/// C per group (power fits consume the lambda-corrected utilization), builds
/// the warp/concurrency details table and trains the config predictor trees.
FitReport fit_from_records(const std::vector<MeasurementRecord> &records, const GpuDocument &doc,
                           const FitOptions &options = {});

} // namespace wattcast

#endif // WATTCAST_FIT_HPP
