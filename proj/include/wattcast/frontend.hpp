#ifndef WATTCAST_FRONTEND_HPP
#define WATTCAST_FRONTEND_HPP

#include <map>
#include <optional>
#include <vector>

#include "wattcast/decision_tree.hpp"
#include "wattcast/kernel_name.hpp"
#include "wattcast/kernels.hpp"

namespace wattcast {

/// Reduction threadblocks cover one row, capped at this many elements.
inline constexpr std::int64_t kReductionRowCap = 1024;
/// Fixed elementwise threadblock size.
inline constexpr std::int64_t kElementwiseTb = 1024;

/// Feature vector for the config predictor: log2 bucket + remainder bit per
/// dimension, plus shape ratios.
std::vector<double> shape_features(const OperatorSpec &op);

struct ConfigSample {
  std::vector<double> features;
  int label = 0; // index into the observed-config table
};

struct TrainResult {
  DecisionTree tree;
  double train_accuracy = 0.0;
};

/// CART over observed tile configs for one (kind, precision) family.
TrainResult train_config_predictor(const std::vector<ConfigSample> &samples,
                                   const TreeParams &params = {});

/// Documented fallback configs per kernel family.
TileConfig default_tile_config(OpKind kind, Precision precision);

/// Deterministic warp-grid guess for a threadblock with `warps` warps:
/// GEMM picks the divisor pair that balances the warp tile aspect,
/// FlashAttention splits along the query rows.
std::array<int, 2> warp_grid_for(OpKind kind, std::int64_t bm, std::int64_t bn, int warps);

struct TilePrediction {
  TileConfig tile;
  enum class Source { Tree, Rule, Default } source = Source::Default;
  bool fallback = false; // no trained tree for this (kind, precision)
};

/// Predicts tiling for operators: decision trees for matmul-family kernels,
/// fixed rules for reductions and elementwise, documented defaults otherwise.
class ConfigPredictor {
public:
  /// Per-config lookup of (warp_grid, concurrency) observed in the database.
  struct TileDetails {
    std::array<int, 2> warp_grid{2, 2};
    int concurrent_tbs_per_sm = 1;
  };

  void add_tree(OpKind kind, Precision precision, DecisionTree tree,
                std::vector<TileConfig> labels);
  void add_tile_details(const KernelGroupKey &key, const TileDetails &details);

  TilePrediction predict(const OperatorSpec &op, const GpuConfig &gpu) const;

  bool has_tree(OpKind kind, Precision precision) const;
  const std::map<std::pair<int, int>, std::pair<DecisionTree, std::vector<TileConfig>>> &trees()
      const {
    return trees_;
  }
  const std::map<KernelGroupKey, TileDetails> &tile_details() const { return details_; }

  /// Fills warp grid / concurrency for a tile from the observed table,
  /// falling back to warp_grid_for and c = 1.
  void apply_tile_details(OpKind kind, Precision precision, TileConfig &tile) const;

private:
  std::map<std::pair<int, int>, std::pair<DecisionTree, std::vector<TileConfig>>> trees_;
  std::map<KernelGroupKey, TileDetails> details_;
};

/// Best-effort tile resolution for a database record: kernel-name fields
/// first, then the observed details table, then family defaults.
struct ResolvedTile {
  TileConfig tile;
  bool from_name = false;
};

ResolvedTile resolve_tile_config(const OperatorSpec &op, const std::string &kernel_name,
                                 std::optional<int> block_threads, std::optional<int> concurrency,
                                 const ConfigPredictor &predictor, const GpuConfig &gpu);

} // namespace wattcast

#endif // WATTCAST_FRONTEND_HPP
