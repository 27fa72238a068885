#ifndef WATTCAST_TESTS_PIPELINE_REPLAY_HPP
#define WATTCAST_TESTS_PIPELINE_REPLAY_HPP

#include "wattcast/kernels.hpp"

namespace wattcast::testing {

/// Event-driven replay of the GEMM kernel timeline: prologue fill, T
/// mainloop iterations with the G->S lane spread over S-1 slots, and the
/// epilogue store chain, repeated per wave. Work amounts are rebuilt here
/// from the tile parameters so the closed-form composition in the library is
/// checked through an independent accumulation path.
double replay_gemm_latency(const OperatorSpec &op, const TileConfig &tile, const GpuConfig &gpu,
                           const PowerConfig &power);

} // namespace wattcast::testing

#endif // WATTCAST_TESTS_PIPELINE_REPLAY_HPP
