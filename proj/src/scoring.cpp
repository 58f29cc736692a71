#include "pism/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pism/error.hpp"
#include "pism/stats.hpp"

namespace pism {

nlohmann::json PercentileTable::to_json() const {
  return {{"service_id", service_id}, {"k", k}, {"cut_points", cut_points}};
}

PercentileTable PercentileTable::from_json(const nlohmann::json& j) {
  PercentileTable t;
  t.service_id = j.at("service_id").get<std::string>();
  t.k = j.at("k").get<int>();
  t.cut_points = j.at("cut_points").get<std::vector<double>>();
  if (t.k < 2 || t.cut_points.size() != static_cast<std::size_t>(t.k - 1)) {
    throw Error("percentile table for " + t.service_id + " has the wrong number of cut points");
  }
  return t;
}

PercentileTable build_percentile_table(std::string service_id, std::span<const double> rt_samples, int k) {
  if (k < 2) throw ConfigError("k must be >= 2");
  if (rt_samples.size() < static_cast<std::size_t>(k)) {
    throw Error("service " + service_id + " has " + std::to_string(rt_samples.size()) +
                " RT samples, need at least " + std::to_string(k));
  }
  std::vector<double> sorted(rt_samples.begin(), rt_samples.end());
  for (double v : sorted) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ValidationError("service " + service_id + " has a non-positive RT sample");
  }
  std::sort(sorted.begin(), sorted.end());
  PercentileTable t;
  t.service_id = std::move(service_id);
  t.k = k;
  for (int i = 1; i < k; ++i) t.cut_points.push_back(nearest_rank(sorted, static_cast<double>(i) / k));
  return t;
}

int rt_to_level(double rt, const PercentileTable& table) {
  if (!(rt > 0.0)) throw ValidationError("RT must be positive");
  const auto below = std::lower_bound(table.cut_points.begin(), table.cut_points.end(), rt) - table.cut_points.begin();
  return std::clamp(1 + static_cast<int>(below), 1, table.k);
}

std::string_view to_string(WeightScheme scheme) {
  switch (scheme) {
    case WeightScheme::Fair: return "fair";
    case WeightScheme::CpuQuota: return "cpu_quota";
    case WeightScheme::Corr: return "corr";
    case WeightScheme::Cv: return "cv";
  }
  return "fair";
}

std::optional<WeightScheme> parse_weight_scheme(std::string_view text) {
  for (auto s : {WeightScheme::Fair, WeightScheme::CpuQuota, WeightScheme::Corr, WeightScheme::Cv}) {
    if (to_string(s) == text) return s;
  }
  return std::nullopt;
}

double raw_weight(WeightScheme scheme, double cpu_quota, const LcsHistory* history, double corr_floor) {
  switch (scheme) {
    case WeightScheme::Fair:
      return 1.0;
    case WeightScheme::CpuQuota:
      if (!(cpu_quota > 0.0)) throw ValidationError("cpu_quota must be positive");
      return cpu_quota;
    case WeightScheme::Corr: {
      if (history == nullptr || history->rt.size() < 2 || history->rt.size() != history->be_cpu.size()) {
        throw Error("corr weighting needs at least two aligned RT/BE-CPU points");
      }
      const double r = pearson(history->rt, history->be_cpu);
      // Undefined or negative correlation means no measurable sensitivity.
      if (std::isnan(r)) return corr_floor;
      return std::max(r, corr_floor);
    }
    case WeightScheme::Cv: {
      if (history == nullptr || history->rt.size() < 2) throw Error("cv weighting needs at least two RT points");
      return coefficient_of_variation(history->rt);
    }
  }
  return 1.0;
}

std::vector<double> normalize_weights(std::span<const double> raw) {
  double sum = 0.0;
  for (double w : raw) {
    if (w < 0.0 || !std::isfinite(w)) throw ValidationError("weights must be finite and non-negative");
    sum += w;
  }
  std::vector<double> out(raw.size(), raw.empty() ? 0.0 : 1.0 / static_cast<double>(raw.size()));
  if (sum > 0.0) {
    for (std::size_t i = 0; i < raw.size(); ++i) out[i] = raw[i] / sum;
  }
  return out;
}

std::vector<double> compute_weights(std::span<const double> cpu_quotas, WeightScheme scheme,
                                    std::span<const LcsHistory> history, double corr_floor) {
  if (cpu_quotas.empty()) throw Error("no LCS instances to weight");
  const bool needs_history = scheme == WeightScheme::Corr || scheme == WeightScheme::Cv;
  if (needs_history && history.size() != cpu_quotas.size()) {
    throw Error("weight history must align with the server's LCS instances");
  }
  std::vector<double> raw;
  raw.reserve(cpu_quotas.size());
  for (std::size_t i = 0; i < cpu_quotas.size(); ++i) {
    raw.push_back(raw_weight(scheme, cpu_quotas[i], needs_history ? &history[i] : nullptr, corr_floor));
  }
  return normalize_weights(raw);
}

double server_score(std::span<const int> levels, std::span<const double> weights) {
  if (levels.size() != weights.size()) throw Error("levels and weights differ in length");
  double s = 0.0;
  for (std::size_t i = 0; i < levels.size(); ++i) s += weights[i] * levels[i];
  return s;
}

nlohmann::json ScoringModel::to_json() const {
  return {{"version", kFormatVersion},
          {"kind", "scoring_model"},
          {"service_id", service_id},
          {"k", k},
          {"training_samples", training_samples},
          {"tree", tree.to_json()}};
}

ScoringModel ScoringModel::from_json(const nlohmann::json& j) {
  if (j.at("version").get<int>() != kFormatVersion) throw Error("unsupported scoring model version");
  ScoringModel m;
  m.service_id = j.at("service_id").get<std::string>();
  m.k = j.at("k").get<int>();
  m.training_samples = j.at("training_samples").get<std::size_t>();
  m.tree = DecisionTree::from_json(j.at("tree"), kCategories);
  return m;
}

namespace {

void check_levels(std::span<const int> levels, int k, const std::string& service_id) {
  for (int l : levels) {
    if (l < 1 || l > k) throw ValidationError("level out of range for service " + service_id);
  }
}

}  // namespace

ScoringModel train_predictor(std::string service_id, std::span<const CompositionVector> compositions,
                             std::span<const int> levels, int k, const PredictorConfig& cfg) {
  if (compositions.size() != levels.size()) throw Error("compositions and levels differ in length");
  if (compositions.empty() || compositions.size() < cfg.min_samples) {
    throw Error("service " + service_id + " has too few samples to train a predictor");
  }
  check_levels(levels, k, service_id);
  std::vector<double> x;
  x.reserve(compositions.size() * kCategories);
  for (const auto& c : compositions) {
    for (auto v : c.counts()) x.push_back(static_cast<double>(v));
  }
  ScoringModel m;
  m.service_id = std::move(service_id);
  m.k = k;
  m.training_samples = compositions.size();
  m.tree = DecisionTree::train(x, kCategories, levels, cfg.tree);
  return m;
}

int predict_lcs_level(const ScoringModel& model, const CompositionVector& composition, int extra_category) {
  return model.tree.predict_with([&](int f) {
    return static_cast<double>(composition[f]) + (f == extra_category ? 1.0 : 0.0);
  });
}

double predict_server_score(const CompositionVector& composition, std::span<const std::size_t> lcs_services,
                            std::span<const double> weights, int candidate_category,
                            const ScoringModelSet& models) {
  if (lcs_services.size() != weights.size()) throw Error("LCS services and weights differ in length");
  double s = 0.0;
  for (std::size_t i = 0; i < lcs_services.size(); ++i) {
    const int level = models.has(lcs_services[i])
                          ? predict_lcs_level(*models.by_service[lcs_services[i]], composition, candidate_category)
                          : models.cold_start_level();
    s += weights[i] * level;
  }
  return s;
}

UtilizationModel train_utilization_predictor(std::string service_id, std::span<const double> be_cpu,
                                             std::span<const int> levels, const PredictorConfig& cfg) {
  if (be_cpu.size() != levels.size()) throw Error("utilization and levels differ in length");
  if (be_cpu.empty() || be_cpu.size() < cfg.min_samples) {
    throw Error("service " + service_id + " has too few samples to train a predictor");
  }
  UtilizationModel m;
  m.service_id = std::move(service_id);
  m.tree = DecisionTree::train(be_cpu, 1, levels, cfg.tree);
  return m;
}

int predict_from_utilization(const UtilizationModel& model, double be_cpu) {
  return model.tree.predict_with([&](int) { return be_cpu; });
}

namespace {

BinaryScores binary_scores(std::size_t tp, std::size_t fp, std::size_t fn) {
  BinaryScores s;
  s.precision = tp + fp > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  s.recall = tp + fn > 0 ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  s.f1 = s.precision + s.recall > 0.0 ? 2.0 * s.precision * s.recall / (s.precision + s.recall) : 0.0;
  return s;
}

}  // namespace

PredictionMetrics evaluate_predictions(std::span<const int> predicted, std::span<const int> actual, int k) {
  if (predicted.size() != actual.size()) throw Error("predicted and actual levels differ in length");
  if (predicted.empty()) throw Error("no predictions to evaluate");
  PredictionMetrics m;
  m.samples = predicted.size();
  const double half = k / 2.0;
  const double high = 0.8 * k;
  const double low = 0.3 * k;
  std::size_t within = 0, busy_tp = 0, busy_fp = 0, busy_fn = 0, idle_tp = 0, idle_fp = 0, idle_fn = 0;
  std::size_t high_as_low = 0, low_as_high = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    const int p = predicted[i];
    const int a = actual[i];
    if (std::abs(p - a) <= 2) ++within;
    const bool pb = p > half;
    const bool ab = a > half;
    if (pb && ab) ++busy_tp;
    if (pb && !ab) ++busy_fp;
    if (!pb && ab) ++busy_fn;
    if (!pb && !ab) ++idle_tp;
    if (!pb && ab) ++idle_fp;
    if (pb && !ab) ++idle_fn;
    if (a > high && p < low) ++high_as_low;
    if (a < low && p > high) ++low_as_high;
  }
  const double n = static_cast<double>(m.samples);
  m.acc_within_2 = static_cast<double>(within) / n;
  m.busy = binary_scores(busy_tp, busy_fp, busy_fn);
  m.idle = binary_scores(idle_tp, idle_fp, idle_fn);
  m.severe_high_as_low_rate = static_cast<double>(high_as_low) / n;
  m.severe_low_as_high_rate = static_cast<double>(low_as_high) / n;
  return m;
}

std::string PredictionMetrics::csv_header() {
  return "samples,acc_within_2,busy_precision,busy_recall,busy_f1,idle_precision,idle_recall,idle_f1,"
         "severe_high_as_low,severe_low_as_high";
}

std::string PredictionMetrics::csv_row() const {
  std::ostringstream os;
  os.precision(6);
  os << samples << ',' << acc_within_2 << ',' << busy.precision << ',' << busy.recall << ',' << busy.f1 << ','
     << idle.precision << ',' << idle.recall << ',' << idle.f1 << ',' << severe_high_as_low_rate << ','
     << severe_low_as_high_rate;
  return os.str();
}

}  // namespace pism
