#ifndef WATTCAST_KERNEL_NAME_HPP
#define WATTCAST_KERNEL_NAME_HPP

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "wattcast/types.hpp"

namespace wattcast {

/// Fields recovered from a cuBLAS/CUTLASS-style kernel name. Unrecognized
/// fields stay unset; provenance records which token produced each field.
struct ParsedKernelName {
  std::optional<std::int64_t> bm, bn, bk;
  std::optional<int> stages;
  std::optional<std::array<int, 3>> instr; // MMA instruction shape (im, in, ik)
  std::optional<Precision> precision;
  std::optional<std::string> layout; // nn | nt | tn | tt
  std::map<std::string, std::string> provenance;

  bool empty() const {
    return !bm && !bn && !bk && !stages && !instr && !precision && !layout;
  }
};

/// Total over arbitrary strings: anything unrecognized yields an empty
/// result, never an error.
ParsedKernelName parse_kernel_name(std::string_view name);

} // namespace wattcast

#endif // WATTCAST_KERNEL_NAME_HPP
