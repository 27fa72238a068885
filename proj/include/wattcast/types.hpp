#ifndef WATTCAST_TYPES_HPP
#define WATTCAST_TYPES_HPP

#include <array>
#include <cstdint>
#include <string>

namespace wattcast {

enum class Precision { bf16, fp32 };

constexpr int bytes_per_element(Precision p) {
  return p == Precision::bf16 ? 2 : 4;
}

/// The six hardware modules the model tracks explicitly.
enum class Module : int {
  Dram = 0,
  L2 = 1,
  Shared = 2,
  TensorCore = 3,
  CudaCore = 4,
  Sfu = 5,
};

constexpr int kModuleCount = 6;

/// One value per Module, indexable by the enum.
using ModuleArray = std::array<double, kModuleCount>;

constexpr double &at(ModuleArray &a, Module m) { return a[static_cast<int>(m)]; }
constexpr double at(const ModuleArray &a, Module m) { return a[static_cast<int>(m)]; }

const char *to_string(Module m);
const char *to_string(Precision p);
Precision precision_from_string(const std::string &s);

} // namespace wattcast

#endif // WATTCAST_TYPES_HPP
