#include "pism/decision_tree.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>

#include "pism/error.hpp"

namespace pism {

namespace {

// Integer-valued features with a small range are scanned with a histogram
// instead of a sort.
constexpr double kCountingRange = 4096.0;

struct Split {
  int feature = -1;
  double threshold = 0.0;
  double score = -1.0;  // sum over children of sum_c n_c^2 / n, higher is better
};

class Builder {
 public:
  Builder(std::span<const double> x, std::size_t dim, std::vector<int> labels, int num_labels,
          const TreeParams& params)
      : x_(x), dim_(dim), y_(std::move(labels)), num_labels_(num_labels), params_(params) {}

  std::vector<DecisionTree::Node> build() {
    std::vector<std::size_t> rows(y_.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
    grow(rows, 0);
    return std::move(nodes_);
  }

 private:
  double at(std::size_t row, std::size_t f) const { return x_[row * dim_ + f]; }

  int grow(std::vector<std::size_t>& rows, int depth) {
    std::vector<std::size_t> counts(static_cast<std::size_t>(num_labels_), 0);
    for (auto r : rows) ++counts[static_cast<std::size_t>(y_[r])];
    const auto majority = static_cast<int>(std::max_element(counts.begin(), counts.end()) - counts.begin());
    const bool pure = std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }) <= 1;

    const int index = static_cast<int>(nodes_.size());
    nodes_.push_back({});
    nodes_.back().label = majority;
    nodes_.back().samples = rows.size();

    if (pure || depth >= params_.max_depth || rows.size() < 2 * params_.min_samples_leaf) return index;

    Split best;
    for (std::size_t f = 0; f < dim_; ++f) consider_feature(rows, f, best);
    if (best.feature < 0) return index;

    std::vector<std::size_t> left, right;
    for (auto r : rows) (at(r, static_cast<std::size_t>(best.feature)) < best.threshold ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();

    nodes_[static_cast<std::size_t>(index)].feature = best.feature;
    nodes_[static_cast<std::size_t>(index)].threshold = best.threshold;
    const int l = grow(left, depth + 1);
    const int r = grow(right, depth + 1);
    nodes_[static_cast<std::size_t>(index)].left = l;
    nodes_[static_cast<std::size_t>(index)].right = r;
    return index;
  }

  // Evaluates every observed value of feature f as a threshold.
  void consider_feature(const std::vector<std::size_t>& rows, std::size_t f, Split& best) {
    double lo = at(rows[0], f), hi = lo;
    bool integral = true;
    for (auto r : rows) {
      const double v = at(r, f);
      lo = std::min(lo, v);
      hi = std::max(hi, v);
      integral = integral && v == std::floor(v);
    }
    if (lo == hi) return;

    // (value, label histogram) in increasing value order.
    values_.clear();
    hist_.clear();
    const auto L = static_cast<std::size_t>(num_labels_);
    if (integral && hi - lo < kCountingRange) {
      const auto range = static_cast<std::size_t>(hi - lo) + 1;
      dense_.assign(range * L, 0);
      for (auto r : rows) {
        dense_[static_cast<std::size_t>(at(r, f) - lo) * L + static_cast<std::size_t>(y_[r])]++;
      }
      for (std::size_t v = 0; v < range; ++v) {
        const auto* h = &dense_[v * L];
        if (std::any_of(h, h + L, [](auto c) { return c > 0; })) {
          values_.push_back(lo + static_cast<double>(v));
          hist_.insert(hist_.end(), h, h + L);
        }
      }
    } else {
      pairs_.clear();
      for (auto r : rows) pairs_.emplace_back(at(r, f), y_[r]);
      std::sort(pairs_.begin(), pairs_.end());
      for (const auto& [v, y] : pairs_) {
        if (values_.empty() || values_.back() != v) {
          values_.push_back(v);
          hist_.resize(hist_.size() + L, 0);
        }
        hist_[(values_.size() - 1) * L + static_cast<std::size_t>(y)]++;
      }
    }

    std::vector<std::size_t> left(L, 0), total(L, 0);
    for (std::size_t v = 0; v < values_.size(); ++v) {
      for (std::size_t c = 0; c < L; ++c) total[c] += hist_[v * L + c];
    }
    const std::size_t n = rows.size();
    std::size_t n_left = 0;
    for (std::size_t v = 1; v < values_.size(); ++v) {
      for (std::size_t c = 0; c < L; ++c) {
        left[c] += hist_[(v - 1) * L + c];
        n_left += hist_[(v - 1) * L + c];
      }
      const std::size_t n_right = n - n_left;
      if (n_left < params_.min_samples_leaf || n_right < params_.min_samples_leaf) continue;
      double sl = 0.0, sr = 0.0;
      for (std::size_t c = 0; c < L; ++c) {
        const double a = static_cast<double>(left[c]);
        const double b = static_cast<double>(total[c] - left[c]);
        sl += a * a;
        sr += b * b;
      }
      const double score = sl / static_cast<double>(n_left) + sr / static_cast<double>(n_right);
      // Strict improvement keeps the earliest (feature, threshold) on ties.
      if (score > best.score + 1e-9 * std::max(1.0, best.score)) {
        best.feature = static_cast<int>(f);
        best.threshold = values_[v];
        best.score = score;
      }
    }
  }

  std::span<const double> x_;
  std::size_t dim_;
  std::vector<int> y_;
  int num_labels_;
  TreeParams params_;
  std::vector<DecisionTree::Node> nodes_;

  std::vector<double> values_;
  std::vector<std::size_t> hist_;
  std::vector<std::size_t> dense_;
  std::vector<std::pair<double, int>> pairs_;
};

}  // namespace

DecisionTree DecisionTree::train(std::span<const double> features, std::size_t dim,
                                 std::span<const int> labels, const TreeParams& params) {
  if (labels.empty()) throw Error("decision tree training set is empty");
  if (dim == 0) throw Error("decision tree needs at least one feature");
  if (features.size() != labels.size() * dim) throw Error("decision tree feature matrix has the wrong size");
  if (params.max_depth < 0) throw ConfigError("max_depth must be >= 0");
  if (params.min_samples_leaf == 0) throw ConfigError("min_samples_leaf must be >= 1");

  // Compact label ids, ordered like the labels themselves so ties still pick the lowest.
  std::vector<int> distinct(labels.begin(), labels.end());
  std::sort(distinct.begin(), distinct.end());
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
  std::vector<int> compact;
  compact.reserve(labels.size());
  for (int y : labels) {
    compact.push_back(static_cast<int>(std::lower_bound(distinct.begin(), distinct.end(), y) - distinct.begin()));
  }

  Builder builder(features, dim, std::move(compact), static_cast<int>(distinct.size()), params);
  DecisionTree tree;
  tree.dim_ = dim;
  tree.nodes_ = builder.build();
  for (auto& n : tree.nodes_) n.label = distinct[static_cast<std::size_t>(n.label)];
  return tree;
}

int DecisionTree::depth() const {
  if (nodes_.empty()) return 0;
  std::function<int(int)> walk = [&](int i) -> int {
    const auto& n = nodes_[static_cast<std::size_t>(i)];
    if (n.feature < 0) return 0;
    return 1 + std::max(walk(n.left), walk(n.right));
  };
  return walk(0);
}

std::size_t DecisionTree::leaf_count() const {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [](const Node& n) { return n.feature < 0; }));
}

nlohmann::json DecisionTree::to_json() const {
  if (nodes_.empty()) throw Error("decision tree is not trained");
  std::function<nlohmann::json(int)> emit = [&](int i) -> nlohmann::json {
    const auto& n = nodes_[static_cast<std::size_t>(i)];
    if (n.feature < 0) return {{"level", n.label}, {"samples", n.samples}};
    return {{"feature", n.feature},
            {"threshold", n.threshold},
            {"samples", n.samples},
            {"left", emit(n.left)},
            {"right", emit(n.right)}};
  };
  return emit(0);
}

DecisionTree DecisionTree::from_json(const nlohmann::json& j, std::size_t dim) {
  DecisionTree tree;
  tree.dim_ = dim;
  std::function<int(const nlohmann::json&)> read = [&](const nlohmann::json& n) -> int {
    const int index = static_cast<int>(tree.nodes_.size());
    tree.nodes_.push_back({});
    const auto samples = n.value("samples", std::size_t{0});
    if (n.contains("level")) {
      tree.nodes_[static_cast<std::size_t>(index)].label = n.at("level").get<int>();
      tree.nodes_[static_cast<std::size_t>(index)].samples = samples;
      return index;
    }
    const int feature = n.at("feature").get<int>();
    if (feature < 0 || static_cast<std::size_t>(feature) >= dim) throw Error("tree feature index out of range");
    const double threshold = n.at("threshold").get<double>();
    const int l = read(n.at("left"));
    const int r = read(n.at("right"));
    auto& node = tree.nodes_[static_cast<std::size_t>(index)];
    node.feature = feature;
    node.threshold = threshold;
    node.left = l;
    node.right = r;
    node.samples = samples;
    return index;
  };
  read(j);
  return tree;
}

}  // namespace pism
