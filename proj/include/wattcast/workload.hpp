#ifndef WATTCAST_WORKLOAD_HPP
#define WATTCAST_WORKLOAD_HPP

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "wattcast/kernels.hpp"

namespace wattcast {

struct WorkloadEntry {
  OperatorSpec op;
  std::int64_t repeat = 1;
  std::optional<TileConfig> tile_override;
};

/// An ordered operator sequence, the unit of end-to-end prediction.
struct Workload {
  std::string name;
  std::vector<WorkloadEntry> ops;

  void validate() const;
  std::int64_t total_operators() const; // repeats included
};

Workload workload_from_json(const std::string &text);
std::string workload_to_json(const Workload &w);
Workload load_workload(const std::string &path);
void save_workload(const std::string &path, const Workload &w);

/// Plain trace form, one operator per line:
///   gemm bf16 B M N K [repeat=R]
///   softmax|layernorm PREC ROWS COLS [repeat=R]
///   elementwise PREC N INPUTS OUTPUTS FLOPS_PER_ELEM [sfu=1] [repeat=R]
///   flashattention PREC B HEADS QLEN KVLEN HEADDIM [repeat=R]
/// '#' starts a comment line.
Workload workload_from_trace(std::istream &in, const std::string &name);

} // namespace wattcast

#endif // WATTCAST_WORKLOAD_HPP
