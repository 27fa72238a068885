#include "wattcast/coeff_store.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "wattcast/errors.hpp"

namespace wattcast {

namespace {

using nlohmann::json;

double log2_dim(std::int64_t v) { return std::log2(static_cast<double>(std::max<std::int64_t>(v, 1))); }

double tile_distance(const KernelGroupKey &a, const KernelGroupKey &b) {
  double d = 0.0;
  for (int i = 0; i < 3; ++i) d += std::abs(log2_dim(a.tb_tile[i]) - log2_dim(b.tb_tile[i]));
  d += std::abs(static_cast<double>(a.pipeline_stages - b.pipeline_stages));
  if (a.epilogue_via_shared != b.epilogue_via_shared) d += 1.0;
  return d;
}

/// Deterministic nearest neighbour among same-kind, same-precision groups.
template <typename Map>
const typename Map::value_type *nearest_group(const Map &entries, const KernelGroupKey &key) {
  const typename Map::value_type *best = nullptr;
  double best_distance = 0.0;
  for (const auto &entry : entries) {
    if (entry.first.kind != key.kind || entry.first.precision != key.precision) continue;
    const double d = tile_distance(entry.first, key);
    if (!best || d < best_distance ||
        (d == best_distance && entry.first.to_string() < best->first.to_string())) {
      best = &entry;
      best_distance = d;
    }
  }
  return best;
}

json key_to_json(const KernelGroupKey &key) {
  json j;
  j["kind"] = to_string(key.kind);
  j["precision"] = to_string(key.precision);
  j["tb_tile"] = key.tb_tile;
  j["stages"] = key.pipeline_stages;
  j["epilogue_via_shared"] = key.epilogue_via_shared;
  return j;
}

KernelGroupKey key_from_json(const json &j) {
  KernelGroupKey key;
  key.kind = op_kind_from_string(j.at("kind").get<std::string>());
  key.precision = precision_from_string(j.at("precision").get<std::string>());
  const auto tile = j.at("tb_tile");
  for (int i = 0; i < 3; ++i) key.tb_tile[static_cast<size_t>(i)] = tile.at(static_cast<size_t>(i)).get<std::int64_t>();
  key.pipeline_stages = j.at("stages").get<int>();
  key.epilogue_via_shared = j.at("epilogue_via_shared").get<bool>();
  return key;
}

json tile_to_json(const TileConfig &t) {
  json j;
  j["tb_tile"] = t.tb_tile;
  j["warp_grid"] = t.warp_grid;
  j["instr_tile"] = t.instr_tile;
  j["stages"] = t.pipeline_stages;
  j["epilogue_via_shared"] = t.epilogue_via_shared;
  j["concurrent_tbs_per_sm"] = t.concurrent_tbs_per_sm;
  return j;
}

TileConfig tile_from_json(const json &j) {
  TileConfig t;
  for (int i = 0; i < 3; ++i) t.tb_tile[static_cast<size_t>(i)] = j.at("tb_tile").at(static_cast<size_t>(i)).get<std::int64_t>();
  for (int i = 0; i < 2; ++i) t.warp_grid[static_cast<size_t>(i)] = j.at("warp_grid").at(static_cast<size_t>(i)).get<int>();
  for (int i = 0; i < 3; ++i) t.instr_tile[static_cast<size_t>(i)] = j.at("instr_tile").at(static_cast<size_t>(i)).get<int>();
  t.pipeline_stages = j.at("stages").get<int>();
  t.epilogue_via_shared = j.at("epilogue_via_shared").get<bool>();
  t.concurrent_tbs_per_sm = j.at("concurrent_tbs_per_sm").get<int>();
  return t;
}

} // namespace

CoeffStore::LatencyLookup CoeffStore::lookup_latency(const KernelGroupKey &key) const {
  LatencyLookup out;
  const auto it = latency.find(key);
  if (it != latency.end()) {
    out.coeffs = it->second.coeffs;
    out.exact = true;
    out.source_group = key.to_string();
    return out;
  }
  if (const auto *near = nearest_group(latency, key)) {
    out.coeffs = near->second.coeffs;
    out.source_group = near->first.to_string();
    return out;
  }
  out.defaulted = true; // identity correction
  return out;
}

CoeffStore::PowerLookup CoeffStore::lookup_power(const KernelGroupKey &key) const {
  PowerLookup out;
  const auto it = power.find(key);
  if (it != power.end()) {
    out.coeffs = it->second.coeffs;
    out.exact = true;
    out.source_group = key.to_string();
    return out;
  }
  if (const auto *near = nearest_group(power, key)) {
    out.coeffs = near->second.coeffs;
    out.source_group = near->first.to_string();
    return out;
  }
  out.defaulted = true; // zero coefficients: dynamic power unknown
  return out;
}

std::string CoeffStore::to_json() const {
  json root;
  root["format"] = "wattcast-store";
  root["version"] = kFormatVersion;

  json lat = json::array();
  for (const auto &[key, entry] : latency) {
    json j;
    j["key"] = key_to_json(key);
    j["lambda_p"] = entry.coeffs.lambda_p;
    j["lambda_m"] = entry.coeffs.lambda_m;
    j["lambda_e"] = entry.coeffs.lambda_e;
    j["epsilon_s"] = entry.coeffs.epsilon;
    j["samples"] = entry.sample_count;
    j["rmse_s"] = entry.rmse;
    j["fitted_at"] = entry.fitted_at;
    if (!entry.notes.empty()) j["notes"] = entry.notes;
    lat.push_back(std::move(j));
  }
  root["latency"] = std::move(lat);

  json pow = json::array();
  for (const auto &[key, entry] : power) {
    json j;
    j["key"] = key_to_json(key);
    json c;
    for (int m = 0; m < kModuleCount; ++m)
      c[to_string(static_cast<Module>(m))] = entry.coeffs.c[static_cast<size_t>(m)];
    j["c_w_per_v2hz"] = std::move(c);
    j["samples"] = entry.sample_count;
    j["rmse_w"] = entry.rmse;
    j["frequencies"] = entry.distinct_frequencies;
    j["fitted_at"] = entry.fitted_at;
    if (!entry.notes.empty()) j["notes"] = entry.notes;
    pow.push_back(std::move(j));
  }
  root["power"] = std::move(pow);

  json trees = json::array();
  for (const auto &[kp, tree_labels] : predictor.trees()) {
    json j;
    j["kind"] = to_string(static_cast<OpKind>(kp.first));
    j["precision"] = to_string(static_cast<Precision>(kp.second));
    j["tree"] = json::parse(tree_labels.first.to_json());
    json labels = json::array();
    for (const TileConfig &t : tree_labels.second) labels.push_back(tile_to_json(t));
    j["labels"] = std::move(labels);
    trees.push_back(std::move(j));
  }
  root["trees"] = std::move(trees);

  json details = json::array();
  for (const auto &[key, d] : predictor.tile_details()) {
    json j;
    j["key"] = key_to_json(key);
    j["warp_grid"] = d.warp_grid;
    j["concurrent_tbs_per_sm"] = d.concurrent_tbs_per_sm;
    details.push_back(std::move(j));
  }
  root["tile_details"] = std::move(details);
  return root.dump(2) + "\n";
}

CoeffStore CoeffStore::from_json(const std::string &text) {
  CoeffStore store;
  json root;
  try {
    root = json::parse(text);
  } catch (const json::exception &e) {
    throw InputError(std::string("coefficient store: invalid JSON: ") + e.what());
  }
  try {
    if (root.at("format").get<std::string>() != "wattcast-store")
      throw InputError("coefficient store: unrecognized format tag");
    if (root.at("version").get<int>() != kFormatVersion)
      throw InputError("coefficient store: unsupported version " +
                       std::to_string(root["version"].get<int>()));

    for (const auto &j : root.value("latency", json::array())) {
      LatencyEntry entry;
      entry.coeffs.lambda_p = j.at("lambda_p").get<double>();
      entry.coeffs.lambda_m = j.at("lambda_m").get<double>();
      entry.coeffs.lambda_e = j.at("lambda_e").get<double>();
      entry.coeffs.epsilon = j.at("epsilon_s").get<double>();
      entry.sample_count = j.value("samples", 0);
      entry.rmse = j.value("rmse_s", 0.0);
      entry.fitted_at = j.value("fitted_at", "");
      if (j.contains("notes")) entry.notes = j["notes"].get<std::vector<std::string>>();
      store.latency[key_from_json(j.at("key"))] = std::move(entry);
    }
    for (const auto &j : root.value("power", json::array())) {
      PowerEntry entry;
      for (int m = 0; m < kModuleCount; ++m)
        entry.coeffs.c[static_cast<size_t>(m)] =
            j.at("c_w_per_v2hz").at(to_string(static_cast<Module>(m))).get<double>();
      entry.sample_count = j.value("samples", 0);
      entry.rmse = j.value("rmse_w", 0.0);
      entry.distinct_frequencies = j.value("frequencies", 0);
      entry.fitted_at = j.value("fitted_at", "");
      if (j.contains("notes")) entry.notes = j["notes"].get<std::vector<std::string>>();
      store.power[key_from_json(j.at("key"))] = std::move(entry);
    }
    for (const auto &j : root.value("trees", json::array())) {
      const OpKind kind = op_kind_from_string(j.at("kind").get<std::string>());
      const Precision precision = precision_from_string(j.at("precision").get<std::string>());
      DecisionTree tree = DecisionTree::from_json(j.at("tree").dump());
      std::vector<TileConfig> labels;
      for (const auto &lj : j.at("labels")) labels.push_back(tile_from_json(lj));
      store.predictor.add_tree(kind, precision, std::move(tree), std::move(labels));
    }
    for (const auto &j : root.value("tile_details", json::array())) {
      ConfigPredictor::TileDetails d;
      for (int i = 0; i < 2; ++i) d.warp_grid[static_cast<size_t>(i)] = j.at("warp_grid").at(static_cast<size_t>(i)).get<int>();
      d.concurrent_tbs_per_sm = j.at("concurrent_tbs_per_sm").get<int>();
      store.predictor.add_tile_details(key_from_json(j.at("key")), d);
    }
  } catch (const json::exception &e) {
    throw InputError(std::string("coefficient store: ") + e.what());
  }
  return store;
}

CoeffStore CoeffStore::load(const std::string &path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open coefficient store: " + path);
  std::stringstream buf;
  buf << in.rdbuf();
  return from_json(buf.str());
}

void CoeffStore::save(const std::string &path) const {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write coefficient store: " + path);
  out << to_json();
}

} // namespace wattcast
