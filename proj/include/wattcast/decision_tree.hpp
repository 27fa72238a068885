#ifndef WATTCAST_DECISION_TREE_HPP
#define WATTCAST_DECISION_TREE_HPP

#include <span>
#include <string>
#include <vector>

namespace wattcast {

struct TreeParams {
  int max_depth = 12;
  int min_leaf = 1;
};

/// Binary CART classifier with Gini impurity and deterministic tie-breaking
/// (lowest feature index, then smallest threshold).
class DecisionTree {
public:
  struct Node {
    int feature = -1;        // -1 marks a leaf
    double threshold = 0.0;  // goes left when x[feature] <= threshold
    int left = -1, right = -1;
    int label = -1;              // majority label at a leaf
    std::vector<int> counts;     // label distribution at a leaf
  };

  void train(const std::vector<std::vector<double>> &features, const std::vector<int> &labels,
             const TreeParams &params = {});

  int predict(std::span<const double> x) const;

  bool trained() const { return !nodes_.empty(); }
  int depth() const;
  double train_accuracy() const { return train_accuracy_; }
  const std::vector<Node> &nodes() const { return nodes_; }

  std::string to_json() const;
  static DecisionTree from_json(const std::string &text);

private:
  int build(const std::vector<std::vector<double>> &features, const std::vector<int> &labels,
            std::vector<int> &indices, int depth, const TreeParams &params, int n_labels);

  std::vector<Node> nodes_;
  double train_accuracy_ = 0.0;
};

} // namespace wattcast

#endif // WATTCAST_DECISION_TREE_HPP
