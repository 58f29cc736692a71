#include "pism/svm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "pism/error.hpp"

namespace pism {

namespace {

double dot(const std::vector<double>& w, const SparseRow& row) {
  double s = w.back();  // bias feature is implicitly 1
  for (auto [idx, v] : row) s += w[idx] * v;
  return s;
}

std::vector<double> train_binary(std::span<const SparseRow> rows, std::span<const int> labels, int positive,
                                 std::size_t dim, const SvmParams& params, std::mt19937_64& rng) {
  const std::size_t n = rows.size();
  std::vector<double> w(dim + 1, 0.0);
  std::vector<double> alpha(n, 0.0);
  std::vector<double> qii(n);
  std::vector<double> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 1.0;
    for (auto [idx, v] : rows[i]) s += v * v;
    qii[i] = s;
    y[i] = labels[i] == positive ? 1.0 : -1.0;
  }
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  const double c = params.c;
  for (int epoch = 0; epoch < params.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double pg_max = -std::numeric_limits<double>::infinity();
    double pg_min = std::numeric_limits<double>::infinity();
    for (std::size_t i : order) {
      const double g = y[i] * dot(w, rows[i]) - 1.0;
      double pg = g;
      if (alpha[i] <= 0.0) {
        pg = std::min(g, 0.0);
      } else if (alpha[i] >= c) {
        pg = std::max(g, 0.0);
      }
      pg_max = std::max(pg_max, pg);
      pg_min = std::min(pg_min, pg);
      if (std::abs(pg) <= 1e-12) continue;
      const double old = alpha[i];
      alpha[i] = std::clamp(old - g / qii[i], 0.0, c);
      const double delta = (alpha[i] - old) * y[i];
      if (delta == 0.0) continue;
      for (auto [idx, v] : rows[i]) w[idx] += delta * v;
      w.back() += delta;
    }
    if (pg_max - pg_min < params.tolerance) break;
  }
  return w;
}

}  // namespace

LinearOvrSvm LinearOvrSvm::train(std::span<const SparseRow> rows, std::span<const int> labels, int num_classes,
                                 std::size_t dim, const SvmParams& params) {
  if (rows.empty()) throw Error("SVM training set is empty");
  if (rows.size() != labels.size()) throw Error("SVM rows and labels differ in length");
  if (num_classes < 1) throw Error("SVM needs at least one class");
  for (const auto& r : rows) {
    for (auto [idx, v] : r) {
      if (idx >= dim) throw Error("SVM feature index out of range");
    }
  }
  LinearOvrSvm model;
  model.num_classes_ = num_classes;
  model.dim_ = dim;
  model.present_.assign(static_cast<std::size_t>(num_classes), false);
  for (int l : labels) {
    if (l < 0 || l >= num_classes) throw Error("SVM label out of range");
    model.present_[static_cast<std::size_t>(l)] = true;
  }
  const auto seen = std::count(model.present_.begin(), model.present_.end(), true);
  model.weights_.assign(static_cast<std::size_t>(num_classes), std::vector<double>(dim + 1, 0.0));
  if (seen == 1) {
    model.constant_ = static_cast<int>(std::find(model.present_.begin(), model.present_.end(), true) -
                                       model.present_.begin());
    return model;
  }
  std::mt19937_64 rng(params.seed);
  for (int cls = 0; cls < num_classes; ++cls) {
    if (!model.present_[static_cast<std::size_t>(cls)]) continue;
    model.weights_[static_cast<std::size_t>(cls)] = train_binary(rows, labels, cls, dim, params, rng);
  }
  return model;
}

double LinearOvrSvm::decision_value(int cls, const SparseRow& row) const {
  return dot(weights_.at(static_cast<std::size_t>(cls)), row);
}

int LinearOvrSvm::predict(const SparseRow& row) const {
  if (!trained()) throw Error("SVM model is not trained");
  if (constant_ >= 0) return constant_;
  int best = -1;
  double best_value = 0.0;
  for (int cls = 0; cls < num_classes_; ++cls) {
    if (!present_[static_cast<std::size_t>(cls)]) continue;
    const double v = decision_value(cls, row);
    if (best < 0 || v > best_value) {
      best = cls;
      best_value = v;
    }
  }
  return best;
}

nlohmann::json LinearOvrSvm::to_json() const {
  return {{"num_classes", num_classes_},
          {"dim", dim_},
          {"constant", constant_},
          {"present", present_},
          {"weights", weights_}};
}

LinearOvrSvm LinearOvrSvm::from_json(const nlohmann::json& j) {
  LinearOvrSvm m;
  m.num_classes_ = j.at("num_classes").get<int>();
  m.dim_ = j.at("dim").get<std::size_t>();
  m.constant_ = j.at("constant").get<int>();
  m.present_ = j.at("present").get<std::vector<bool>>();
  m.weights_ = j.at("weights").get<std::vector<std::vector<double>>>();
  if (m.weights_.size() != static_cast<std::size_t>(m.num_classes_) ||
      m.present_.size() != static_cast<std::size_t>(m.num_classes_)) {
    throw Error("SVM model: class count mismatch");
  }
  for (const auto& w : m.weights_) {
    if (w.size() != m.dim_ + 1) throw Error("SVM model: weight vector has wrong length");
  }
  return m;
}

}  // namespace pism
