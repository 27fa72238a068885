#include "wattcast/frontend.hpp"

#include <algorithm>
#include <cmath>

#include "wattcast/errors.hpp"

namespace wattcast {

namespace {

void push_bucketed(std::vector<double> &out, std::int64_t v) {
  const double lg = std::floor(std::log2(static_cast<double>(std::max<std::int64_t>(v, 1))));
  out.push_back(lg);
  out.push_back(static_cast<double>(v) == std::exp2(lg) ? 0.0 : 1.0);
}

} // namespace

std::vector<double> shape_features(const OperatorSpec &op) {
  std::vector<double> f;
  switch (op.kind) {
  case OpKind::Gemm: {
    const auto &g = op.gemm();
    push_bucketed(f, g.b);
    push_bucketed(f, g.m);
    push_bucketed(f, g.n);
    push_bucketed(f, g.k);
    f.push_back(static_cast<double>(g.m) / static_cast<double>(g.n));
    f.push_back(static_cast<double>(g.k) / static_cast<double>(std::max(g.m, g.n)));
    break;
  }
  case OpKind::FlashAttention: {
    const auto &fa = op.flash_attention();
    push_bucketed(f, fa.b);
    push_bucketed(f, fa.heads);
    push_bucketed(f, fa.q_len);
    push_bucketed(f, fa.kv_len);
    push_bucketed(f, fa.head_dim);
    f.push_back(static_cast<double>(fa.q_len) / static_cast<double>(fa.kv_len));
    break;
  }
  case OpKind::Softmax:
  case OpKind::LayerNorm: {
    const auto &r = op.reduction();
    push_bucketed(f, r.rows);
    push_bucketed(f, r.cols);
    break;
  }
  case OpKind::Elementwise: {
    const auto &e = op.elementwise();
    push_bucketed(f, e.n);
    f.push_back(static_cast<double>(e.inputs));
    f.push_back(static_cast<double>(e.outputs));
    break;
  }
  }
  return f;
}

TrainResult train_config_predictor(const std::vector<ConfigSample> &samples,
                                   const TreeParams &params) {
  if (samples.size() < 2) throw FitError("config predictor: need at least 2 samples");
  std::vector<std::vector<double>> features;
  std::vector<int> labels;
  features.reserve(samples.size());
  for (const auto &s : samples) {
    features.push_back(s.features);
    labels.push_back(s.label);
  }
  TrainResult out;
  out.tree.train(features, labels, params);
  out.train_accuracy = out.tree.train_accuracy();
  return out;
}

TileConfig default_tile_config(OpKind kind, Precision precision) {
  TileConfig t;
  switch (kind) {
  case OpKind::Gemm:
    if (precision == Precision::bf16) {
      t.tb_tile = {128, 128, 32};
      t.warp_grid = {2, 2};
      t.instr_tile = {16, 8, 16};
      t.pipeline_stages = 3;
      t.epilogue_via_shared = true;
    } else {
      t.tb_tile = {128, 64, 8};
      t.warp_grid = {2, 2};
      t.instr_tile = {1, 1, 1};
      t.pipeline_stages = 2;
      t.epilogue_via_shared = true; // SIMT kernels stage stores for coalescing
    }
    break;
  case OpKind::FlashAttention:
    t.tb_tile = {128, 64, 0};
    t.warp_grid = {4, 1};
    t.instr_tile = {16, 8, 16};
    t.pipeline_stages = 2;
    t.epilogue_via_shared = false;
    break;
  case OpKind::Softmax:
  case OpKind::LayerNorm:
    t.tb_tile = {kReductionRowCap, 0, 0};
    t.warp_grid = {4, 1};
    t.instr_tile = {1, 1, 1};
    t.pipeline_stages = 1;
    break;
  case OpKind::Elementwise:
    t.tb_tile = {kElementwiseTb, 0, 0};
    t.warp_grid = {4, 1};
    t.instr_tile = {1, 1, 1};
    t.pipeline_stages = 1;
    break;
  }
  return t;
}

std::array<int, 2> warp_grid_for(OpKind kind, std::int64_t bm, std::int64_t bn, int warps) {
  if (warps < 1) return {2, 2};
  if (kind == OpKind::FlashAttention) return {warps, 1}; // query rows split
  std::array<int, 2> best{warps, 1};
  double best_skew = std::numeric_limits<double>::infinity();
  for (int wm = 1; wm <= warps; ++wm) {
    if (warps % wm != 0) continue;
    const int wn = warps / wm;
    const double skew = std::abs(static_cast<double>(bm) / wm - static_cast<double>(bn) / wn);
    if (skew < best_skew) {
      best_skew = skew;
      best = {wm, wn};
    }
  }
  return best;
}

void ConfigPredictor::add_tree(OpKind kind, Precision precision, DecisionTree tree,
                               std::vector<TileConfig> labels) {
  trees_[{static_cast<int>(kind), static_cast<int>(precision)}] = {std::move(tree),
                                                                   std::move(labels)};
}

void ConfigPredictor::add_tile_details(const KernelGroupKey &key, const TileDetails &details) {
  details_[key] = details;
}

bool ConfigPredictor::has_tree(OpKind kind, Precision precision) const {
  return trees_.count({static_cast<int>(kind), static_cast<int>(precision)}) > 0;
}

void ConfigPredictor::apply_tile_details(OpKind kind, Precision precision,
                                         TileConfig &tile) const {
  OperatorSpec probe;
  probe.kind = kind;
  probe.precision = precision;
  KernelGroupKey key;
  key.kind = kind;
  key.precision = precision;
  key.tb_tile = tile.tb_tile;
  if (kind == OpKind::FlashAttention) key.tb_tile[2] = 0;
  if (is_reduction(kind) || kind == OpKind::Elementwise) key.tb_tile = {tile.tb_tile[0], 0, 0};
  key.pipeline_stages = tile.pipeline_stages;
  key.epilogue_via_shared = tile.epilogue_via_shared;
  const auto it = details_.find(key);
  if (it != details_.end()) {
    tile.warp_grid = it->second.warp_grid;
    tile.concurrent_tbs_per_sm = it->second.concurrent_tbs_per_sm;
  }
}

TilePrediction ConfigPredictor::predict(const OperatorSpec &op, const GpuConfig &gpu) const {
  TilePrediction out;

  // Rule-based families never consult the tree.
  if (is_reduction(op.kind)) {
    out.tile = default_tile_config(op.kind, op.precision);
    out.tile.tb_tile[0] = std::min<std::int64_t>(op.reduction().cols, kReductionRowCap);
    out.tile.concurrent_tbs_per_sm = gpu.max_concurrent_tbs_per_sm_default;
    out.source = TilePrediction::Source::Rule;
    return out;
  }
  if (op.kind == OpKind::Elementwise) {
    out.tile = default_tile_config(op.kind, op.precision);
    out.tile.concurrent_tbs_per_sm = gpu.max_concurrent_tbs_per_sm_default;
    out.source = TilePrediction::Source::Rule;
    return out;
  }

  const auto it = trees_.find({static_cast<int>(op.kind), static_cast<int>(op.precision)});
  if (it == trees_.end() || !it->second.first.trained() || it->second.second.empty()) {
    out.tile = default_tile_config(op.kind, op.precision);
    out.tile.concurrent_tbs_per_sm = gpu.max_concurrent_tbs_per_sm_default;
    out.source = TilePrediction::Source::Default;
    out.fallback = true;
    return out;
  }

  const std::vector<double> features = shape_features(op);
  const int label = it->second.first.predict(features);
  const auto &configs = it->second.second;
  if (label < 0 || label >= static_cast<int>(configs.size())) {
    out.tile = default_tile_config(op.kind, op.precision);
    out.fallback = true;
    out.source = TilePrediction::Source::Default;
    return out;
  }
  out.tile = configs[static_cast<size_t>(label)];
  out.source = TilePrediction::Source::Tree;
  return out;
}

ResolvedTile resolve_tile_config(const OperatorSpec &op, const std::string &kernel_name,
                                 std::optional<int> block_threads, std::optional<int> concurrency,
                                 const ConfigPredictor &predictor, const GpuConfig &gpu) {
  ResolvedTile out;
  out.tile = default_tile_config(op.kind, op.precision);

  if (is_reduction(op.kind))
    out.tile.tb_tile[0] = std::min<std::int64_t>(op.reduction().cols, kReductionRowCap);

  const ParsedKernelName parsed = parse_kernel_name(kernel_name);
  if (!parsed.empty() && (op.kind == OpKind::Gemm || op.kind == OpKind::FlashAttention)) {
    out.from_name = true;
    if (parsed.bm) out.tile.tb_tile[0] = *parsed.bm;
    if (parsed.bn) out.tile.tb_tile[1] = *parsed.bn;
    if (parsed.bk && op.kind == OpKind::Gemm) out.tile.tb_tile[2] = *parsed.bk;
    if (parsed.stages) out.tile.pipeline_stages = *parsed.stages;
    if (parsed.instr) out.tile.instr_tile = *parsed.instr;
  }

  // Observed grid/block/concurrency beats both the name and the defaults.
  predictor.apply_tile_details(op.kind, op.precision, out.tile);
  if (block_threads && *block_threads >= 32)
    out.tile.warp_grid =
        warp_grid_for(op.kind, out.tile.tb_tile[0], out.tile.tb_tile[1], *block_threads / 32);
  if (concurrency && *concurrency >= 1)
    out.tile.concurrent_tbs_per_sm = *concurrency;
  else if (!concurrency && out.tile.concurrent_tbs_per_sm < 1)
    out.tile.concurrent_tbs_per_sm = gpu.max_concurrent_tbs_per_sm_default;
  return out;
}

} // namespace wattcast
