#include "wattcast/decision_tree.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "wattcast/errors.hpp"

namespace wattcast {

namespace {

double gini(const std::vector<int> &counts, int total) {
  if (total == 0) return 0.0;
  double sum_sq = 0.0;
  for (int c : counts) {
    const double p = static_cast<double>(c) / total;
    sum_sq += p * p;
  }
  return 1.0 - sum_sq;
}

int majority(const std::vector<int> &counts) {
  int best = 0;
  for (size_t i = 1; i < counts.size(); ++i)
    if (counts[i] > counts[static_cast<size_t>(best)]) best = static_cast<int>(i);
  return best; // ties resolve to the smallest label id
}

} // namespace

void DecisionTree::train(const std::vector<std::vector<double>> &features,
                         const std::vector<int> &labels, const TreeParams &params) {
  if (features.empty() || features.size() != labels.size())
    throw FitError("decision tree: empty dataset or feature/label size mismatch");
  int n_labels = 0;
  for (int y : labels) {
    if (y < 0) throw FitError("decision tree: labels must be non-negative");
    n_labels = std::max(n_labels, y + 1);
  }
  nodes_.clear();
  std::vector<int> indices(features.size());
  for (size_t i = 0; i < indices.size(); ++i) indices[i] = static_cast<int>(i);
  build(features, labels, indices, 0, params, n_labels);

  int correct = 0;
  for (size_t i = 0; i < features.size(); ++i)
    if (predict(features[i]) == labels[i]) ++correct;
  train_accuracy_ = static_cast<double>(correct) / static_cast<double>(features.size());
}

int DecisionTree::build(const std::vector<std::vector<double>> &features,
                        const std::vector<int> &labels, std::vector<int> &indices, int depth,
                        const TreeParams &params, int n_labels) {
  std::vector<int> counts(static_cast<size_t>(n_labels), 0);
  for (int i : indices) ++counts[static_cast<size_t>(labels[static_cast<size_t>(i)])];
  const int total = static_cast<int>(indices.size());
  const double parent_gini = gini(counts, total);

  auto make_leaf = [&]() {
    Node leaf;
    leaf.label = majority(counts);
    leaf.counts = counts;
    nodes_.push_back(std::move(leaf));
    return static_cast<int>(nodes_.size()) - 1;
  };

  if (parent_gini == 0.0 || depth >= params.max_depth || total < 2 * params.min_leaf)
    return make_leaf();

  const int n_features = static_cast<int>(features[static_cast<size_t>(indices[0])].size());
  int best_feature = -1;
  double best_threshold = 0.0;
  double best_gain = 1e-12;

  std::vector<std::pair<double, int>> column(static_cast<size_t>(total));
  for (int f = 0; f < n_features; ++f) {
    for (int i = 0; i < total; ++i) {
      const int idx = indices[static_cast<size_t>(i)];
      column[static_cast<size_t>(i)] = {features[static_cast<size_t>(idx)][static_cast<size_t>(f)],
                                        labels[static_cast<size_t>(idx)]};
    }
    std::sort(column.begin(), column.end());

    std::vector<int> left_counts(static_cast<size_t>(n_labels), 0);
    std::vector<int> right_counts = counts;
    for (int i = 0; i < total - 1; ++i) {
      const auto &[value, label] = column[static_cast<size_t>(i)];
      ++left_counts[static_cast<size_t>(label)];
      --right_counts[static_cast<size_t>(label)];
      const double next_value = column[static_cast<size_t>(i) + 1].first;
      if (value == next_value) continue;
      const int n_left = i + 1, n_right = total - n_left;
      if (n_left < params.min_leaf || n_right < params.min_leaf) continue;
      const double split_gini = (n_left * gini(left_counts, n_left) +
                                 n_right * gini(right_counts, n_right)) /
                                total;
      const double gain = parent_gini - split_gini;
      // strict improvement; equal gains keep the earlier feature/threshold
      if (gain > best_gain + 1e-12) {
        best_gain = gain;
        best_feature = f;
        best_threshold = (value + next_value) / 2.0;
      }
    }
  }

  if (best_feature < 0) return make_leaf();

  std::vector<int> left_idx, right_idx;
  for (int i : indices) {
    if (features[static_cast<size_t>(i)][static_cast<size_t>(best_feature)] <= best_threshold)
      left_idx.push_back(i);
    else
      right_idx.push_back(i);
  }

  const int node_id = static_cast<int>(nodes_.size());
  nodes_.emplace_back();
  nodes_[static_cast<size_t>(node_id)].feature = best_feature;
  nodes_[static_cast<size_t>(node_id)].threshold = best_threshold;
  const int left = build(features, labels, left_idx, depth + 1, params, n_labels);
  const int right = build(features, labels, right_idx, depth + 1, params, n_labels);
  nodes_[static_cast<size_t>(node_id)].left = left;
  nodes_[static_cast<size_t>(node_id)].right = right;
  return node_id;
}

int DecisionTree::predict(std::span<const double> x) const {
  if (nodes_.empty()) throw InputError("decision tree: predict on an untrained tree");
  int node = 0;
  while (nodes_[static_cast<size_t>(node)].feature >= 0) {
    const Node &n = nodes_[static_cast<size_t>(node)];
    node = x[static_cast<size_t>(n.feature)] <= n.threshold ? n.left : n.right;
  }
  return nodes_[static_cast<size_t>(node)].label;
}

int DecisionTree::depth() const {
  if (nodes_.empty()) return 0;
  // nodes are stored pre-order; walk recursively
  struct Walker {
    const std::vector<Node> &nodes;
    int walk(int id) const {
      const Node &n = nodes[static_cast<size_t>(id)];
      if (n.feature < 0) return 0;
      return 1 + std::max(walk(n.left), walk(n.right));
    }
  };
  return Walker{nodes_}.walk(0);
}

std::string DecisionTree::to_json() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const Node &n : nodes_) {
    nlohmann::json j;
    j["feature"] = n.feature;
    j["threshold"] = n.threshold;
    j["left"] = n.left;
    j["right"] = n.right;
    j["label"] = n.label;
    if (!n.counts.empty()) j["counts"] = n.counts;
    arr.push_back(std::move(j));
  }
  nlohmann::json root;
  root["nodes"] = std::move(arr);
  root["train_accuracy"] = train_accuracy_;
  return root.dump();
}

DecisionTree DecisionTree::from_json(const std::string &text) {
  DecisionTree tree;
  try {
    const nlohmann::json root = nlohmann::json::parse(text);
    for (const auto &j : root.at("nodes")) {
      Node n;
      n.feature = j.at("feature").get<int>();
      n.threshold = j.at("threshold").get<double>();
      n.left = j.at("left").get<int>();
      n.right = j.at("right").get<int>();
      n.label = j.at("label").get<int>();
      if (j.contains("counts")) n.counts = j["counts"].get<std::vector<int>>();
      tree.nodes_.push_back(std::move(n));
    }
    tree.train_accuracy_ = root.value("train_accuracy", 0.0);
  } catch (const nlohmann::json::exception &e) {
    throw InputError(std::string("decision tree: bad serialized form: ") + e.what());
  }
  return tree;
}

} // namespace wattcast
