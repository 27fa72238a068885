#include "wattcast/types.hpp"

#include "wattcast/errors.hpp"

namespace wattcast {

const char *to_string(Module m) {
  switch (m) {
  case Module::Dram: return "dram";
  case Module::L2: return "l2";
  case Module::Shared: return "shared";
  case Module::TensorCore: return "tensor";
  case Module::CudaCore: return "cuda";
  case Module::Sfu: return "sfu";
  }
  return "?";
}

const char *to_string(Precision p) {
  return p == Precision::bf16 ? "bf16" : "fp32";
}

Precision precision_from_string(const std::string &s) {
  if (s == "bf16") return Precision::bf16;
  if (s == "fp32") return Precision::fp32;
  throw InputError("unknown precision '" + s + "' (expected bf16 or fp32)");
}

} // namespace wattcast
