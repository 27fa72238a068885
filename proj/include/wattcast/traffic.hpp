#ifndef WATTCAST_TRAFFIC_HPP
#define WATTCAST_TRAFFIC_HPP

#include <cstdint>

#include "wattcast/kernels.hpp"

namespace wattcast {

/// Per-hierarchy byte counts for one kernel under ideal threadblock
/// swizzling: every distinct operand tile leaves DRAM exactly once, the L2
/// sees every request.
struct TrafficBreakdown {
  std::uint64_t dram_load = 0;
  std::uint64_t dram_store = 0;
  std::uint64_t l2_load = 0;
  std::uint64_t l2_store = 0;
  std::uint64_t shared_load = 0;
  std::uint64_t shared_store = 0;

  bool operator==(const TrafficBreakdown &) const = default;
};

TrafficBreakdown gemm_traffic(const OperatorSpec &op, const TileConfig &tile);
TrafficBreakdown reduction_traffic(const OperatorSpec &op, const TileConfig &tile);
TrafficBreakdown flashattention_traffic(const OperatorSpec &op, const TileConfig &tile);
TrafficBreakdown elementwise_traffic(const OperatorSpec &op, const TileConfig &tile);

/// Closed-form traffic for any kernel kind.
TrafficBreakdown traffic(const OperatorSpec &op, const TileConfig &tile);

/// Brute-force reference: enumerates every threadblock and tile access in
/// schedule order, keeping a loaded-once set for DRAM and counting all
/// requests for L2/shared. Must match the closed forms bit-exactly.
/// Throws OracleBudgetError when the enumeration would exceed max_steps.
TrafficBreakdown oracle_traffic(const OperatorSpec &op, const TileConfig &tile,
                                std::uint64_t max_steps = 50'000'000);

} // namespace wattcast

#endif // WATTCAST_TRAFFIC_HPP
