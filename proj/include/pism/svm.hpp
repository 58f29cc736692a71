#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "json.hpp"

namespace pism {

// Sparse row: (feature index, value) pairs with strictly increasing indices.
using SparseRow = std::vector<std::pair<std::uint32_t, double>>;

struct SvmParams {
  double c = 1.0;
  int max_epochs = 60;
  double tolerance = 1e-3;
  std::uint64_t seed = 1;
};

// One-vs-rest linear max-margin classifier. Each binary problem is the
// L2-regularized hinge-loss SVM solved by dual coordinate descent; a constant
// bias feature is appended internally.
class LinearOvrSvm {
 public:
  LinearOvrSvm() = default;

  static LinearOvrSvm train(std::span<const SparseRow> rows, std::span<const int> labels,
                            int num_classes, std::size_t dim, const SvmParams& params);

  bool trained() const { return num_classes_ > 0; }
  int num_classes() const { return num_classes_; }

  // Argmax of the per-class decision values among classes seen in training;
  // the lowest class index wins ties.
  int predict(const SparseRow& row) const;
  double decision_value(int cls, const SparseRow& row) const;

  nlohmann::json to_json() const;
  static LinearOvrSvm from_json(const nlohmann::json& j);

 private:
  int num_classes_ = 0;
  std::size_t dim_ = 0;
  std::vector<std::vector<double>> weights_;  // [class][dim + 1], last = bias
  std::vector<bool> present_;
  int constant_ = -1;  // >= 0 when only one class was seen
};

}  // namespace pism
