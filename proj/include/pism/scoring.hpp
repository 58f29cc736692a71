#pragma once

#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "pism/characterization.hpp"
#include "pism/decision_tree.hpp"

namespace pism {

inline constexpr int kDefaultLevels = 10;

// Maps RT to levels 1..k by the reference distribution's percentiles.
struct PercentileTable {
  std::string service_id;
  int k = kDefaultLevels;
  std::vector<double> cut_points;  // k - 1 values, nondecreasing

  nlohmann::json to_json() const;
  static PercentileTable from_json(const nlohmann::json& j);
};

// cut_points[i] is the nearest-rank quantile at (i + 1) / k. Needs >= k
// positive samples.
PercentileTable build_percentile_table(std::string service_id, std::span<const double> rt_samples,
                                       int k = kDefaultLevels);

// 1 + number of cut points strictly below rt, clamped to [1, k]. rt must be positive.
int rt_to_level(double rt, const PercentileTable& table);

enum class WeightScheme { Fair, CpuQuota, Corr, Cv };

std::string_view to_string(WeightScheme scheme);
std::optional<WeightScheme> parse_weight_scheme(std::string_view text);

// Aligned per-instance history: RT and total BE CPU on the hosting server.
struct LcsHistory {
  std::vector<double> rt;
  std::vector<double> be_cpu;
};

inline constexpr double kCorrFloor = 0.01;

// Pre-normalization weight of one instance under a scheme.
double raw_weight(WeightScheme scheme, double cpu_quota, const LcsHistory* history,
                  double corr_floor = kCorrFloor);

// Normalizes raw weights to sum to 1; falls back to uniform when they sum to 0.
std::vector<double> normalize_weights(std::span<const double> raw);

// Weights for the LCS instances of one server (at least one). `history` may be empty for
// Fair/CpuQuota; Corr/Cv need >= 2 aligned points per instance.
std::vector<double> compute_weights(std::span<const double> cpu_quotas, WeightScheme scheme,
                                    std::span<const LcsHistory> history,
                                    double corr_floor = kCorrFloor);

// Sum of w_i * level_i.
double server_score(std::span<const int> levels, std::span<const double> weights);

// Per-service level predictor over the 60-dimensional composition vector.
struct ScoringModel {
  static constexpr int kFormatVersion = 1;

  std::string service_id;
  int k = kDefaultLevels;
  DecisionTree tree;
  std::size_t training_samples = 0;

  nlohmann::json to_json() const;
  static ScoringModel from_json(const nlohmann::json& j);
};

struct PredictorConfig {
  TreeParams tree;
  std::size_t min_samples = 1;
};

ScoringModel train_predictor(std::string service_id, std::span<const CompositionVector> compositions,
                             std::span<const int> levels, int k, const PredictorConfig& cfg = {});

// Level for `composition`, optionally with one extra instance of
// `extra_category` (-1 for none).
int predict_lcs_level(const ScoringModel& model, const CompositionVector& composition,
                      int extra_category = -1);

// Models indexed by service; a missing entry means cold start.
struct ScoringModelSet {
  int k = kDefaultLevels;
  std::vector<std::optional<ScoringModel>> by_service;

  int cold_start_level() const { return (k + 1) / 2; }
  bool has(std::size_t service) const {
    return service < by_service.size() && by_service[service].has_value();
  }
};

// What-if score of a server after adding one instance of candidate_category.
// `lcs_services[i]` is the service of the server's i-th LCS instance and
// `weights[i]` its normalized weight. A server without LCS instances scores 0.
double predict_server_score(const CompositionVector& composition,
                            std::span<const std::size_t> lcs_services,
                            std::span<const double> weights, int candidate_category,
                            const ScoringModelSet& models);

// Baseline predictor: the same tree over the scalar total BE CPU of the server.
struct UtilizationModel {
  std::string service_id;
  DecisionTree tree;
};

UtilizationModel train_utilization_predictor(std::string service_id, std::span<const double> be_cpu,
                                             std::span<const int> levels, const PredictorConfig& cfg = {});
int predict_from_utilization(const UtilizationModel& model, double be_cpu);

struct BinaryScores {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
};

struct PredictionMetrics {
  std::size_t samples = 0;
  double acc_within_2 = 0.0;
  BinaryScores busy;
  BinaryScores idle;
  double severe_high_as_low_rate = 0.0;  // actual > 0.8k, predicted < 0.3k
  double severe_low_as_high_rate = 0.0;  // actual < 0.3k, predicted > 0.8k

  static std::string csv_header();
  std::string csv_row() const;
};

// BUSY means level > k/2.
PredictionMetrics evaluate_predictions(std::span<const int> predicted, std::span<const int> actual, int k);

}  // namespace pism
