#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "json.hpp"

namespace pism {

struct TreeParams {
  int max_depth = 8;
  std::size_t min_samples_leaf = 5;
};

// Greedy CART classifier with Gini impurity over integer labels. Splits are
// axis-aligned: x[feature] < threshold goes left. Thresholds are observed
// feature values, so integer features get integer thresholds. Ties between
// candidate splits resolve to the lowest feature, then the lowest threshold.
// Leaves predict the majority label (lowest label on ties).
class DecisionTree {
 public:
  struct Node {
    int feature = -1;  // -1 for a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    int label = 0;
    std::size_t samples = 0;
  };

  DecisionTree() = default;

  // `features` is row-major with `dim` columns. Throws Error when empty.
  static DecisionTree train(std::span<const double> features, std::size_t dim,
                            std::span<const int> labels, const TreeParams& params);

  bool trained() const { return !nodes_.empty(); }
  std::size_t dim() const { return dim_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  int depth() const;
  std::size_t leaf_count() const;

  // `value(f)` returns feature f of the query point.
  template <typename FeatureFn>
  int predict_with(FeatureFn&& value) const {
    int at = 0;
    while (nodes_[static_cast<std::size_t>(at)].feature >= 0) {
      const Node& n = nodes_[static_cast<std::size_t>(at)];
      at = value(n.feature) < n.threshold ? n.left : n.right;
    }
    return nodes_[static_cast<std::size_t>(at)].label;
  }

  int predict(std::span<const double> x) const {
    return predict_with([&](int f) { return x[static_cast<std::size_t>(f)]; });
  }

  // Nested form: {"feature", "threshold", "left", "right"} or {"level"}.
  nlohmann::json to_json() const;
  static DecisionTree from_json(const nlohmann::json& j, std::size_t dim);

 private:
  std::size_t dim_ = 0;
  std::vector<Node> nodes_;
};

}  // namespace pism
