#ifndef WATTCAST_DB_HPP
#define WATTCAST_DB_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "wattcast/frontend.hpp"
#include "wattcast/kernels.hpp"

namespace wattcast {

/// One measured kernel from the offline database.
struct MeasurementRecord {
  std::int64_t id = 0;
  std::string gpu_name;
  OperatorSpec op;
  std::string kernel_name;                          // empty when unknown
  std::optional<std::array<std::int64_t, 3>> grid;  // launch grid, x.y.z
  std::optional<int> block_threads;
  std::optional<int> concurrency;                   // threadblocks per SM
  double core_freq = 0.0;   // Hz
  double latency = 0.0;     // seconds
  std::optional<double> power;       // total watts
  std::optional<double> idle_power;  // watts at core_freq

  void validate() const;
};

/// Database file format, fixed by the v1 header:
///   line 1: "# wattcast database v1"
///   line 2: id,gpu,kind,precision,shape,kernel_name,grid,block,concurrency,
///           core_freq_hz,latency_s,power_w,idle_power_w
/// Shape tokens: gemm:B.M.N.K | softmax:R.C | layernorm:R.C |
/// elementwise:N.IN.OUT.FLOPS.SFU | flashattention:B.H.SQ.SK.D.
/// Optional fields are empty strings. Fields containing commas or quotes are
/// double-quoted (standard CSV escaping).
struct LoadReport {
  std::vector<MeasurementRecord> records;
  int accepted = 0;
  int rejected = 0;
  std::vector<std::string> diagnostics; // line-numbered reasons for rejects
};

LoadReport load_database(const std::string &path, bool strict = false);
void save_database(const std::string &path, const std::vector<MeasurementRecord> &records);

std::string encode_shape(const OperatorSpec &op);
OperatorSpec decode_shape(const std::string &kind, const std::string &precision,
                          const std::string &shape);

/// Records that end up in one fitting group, with their resolved tiles.
struct RecordGroup {
  TileConfig representative_tile;
  std::vector<const MeasurementRecord *> records;
  std::vector<TileConfig> tiles; // parallel to records
  int resolved_from_name = 0;    // how many tiles came from kernel names
};

struct GroupReport {
  std::map<KernelGroupKey, RecordGroup> groups;
  int defaulted = 0; // matmul-family records whose names taught us nothing
};

/// Partitions records by their fitted-coefficient identity. Every record
/// lands in exactly one group; tiles resolve through parse_kernel_name with
/// frontend defaults as the fallback.
GroupReport group_records(const std::vector<MeasurementRecord> &records,
                          const ConfigPredictor &predictor, const GpuConfig &gpu);

/// Deterministic split utility for held-out evaluation.
std::pair<std::vector<MeasurementRecord>, std::vector<MeasurementRecord>>
split_database(const std::vector<MeasurementRecord> &records, double held_out_fraction,
               std::uint64_t seed);

} // namespace wattcast

#endif // WATTCAST_DB_HPP
