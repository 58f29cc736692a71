#include "pism/task_classifier.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <tuple>

#include "pism/error.hpp"
#include "pism/stats.hpp"

namespace pism {

namespace {

constexpr int kJobTypes = 4;
constexpr int kNumeric = 3;

std::array<double, kNumeric> numeric_raw(const TaskFeatures& f) {
  return {static_cast<double>(f.submission_hour), static_cast<double>(f.instance_count),
          static_cast<double>(f.task_position)};
}

auto sort_key(const LabeledTask& t) {
  const auto& f = t.features;
  return std::make_tuple(f.group_tag, f.task_position, f.submission_hour, f.instance_count,
                         static_cast<int>(f.job_type), t.category.flat_index());
}

template <typename Key>
std::map<Key, std::uint32_t> build_vocab(const std::vector<Key>& keys, std::size_t cap, bool& overflow) {
  std::map<Key, std::size_t> freq;
  for (const auto& k : keys) ++freq[k];
  std::vector<std::pair<Key, std::size_t>> ranked(freq.begin(), freq.end());
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  std::map<Key, std::uint32_t> vocab;
  for (std::size_t i = 0; i < ranked.size() && i < cap; ++i) {
    vocab.emplace(ranked[i].first, static_cast<std::uint32_t>(i));
  }
  overflow = ranked.size() > cap;
  return vocab;
}

}  // namespace

TaskFeatures extract_features(const BeJob& job, std::size_t task_index, std::int64_t group_tag) {
  if (task_index >= job.tasks.size()) throw Error("task index out of range for job " + job.job_id);
  return extract_job_features(job, group_tag)[task_index];
}

std::vector<TaskFeatures> extract_job_features(const BeJob& job, std::int64_t group_tag) {
  const auto order = job.dag.topological_order();
  std::vector<int> position(job.dag.size(), 0);
  for (std::size_t i = 0; i < order.size(); ++i) position[order[i]] = static_cast<int>(i);
  const auto hours = static_cast<std::int64_t>(std::floor(job.submission_time / 3600.0));
  std::vector<TaskFeatures> out;
  out.reserve(job.tasks.size());
  for (std::size_t i = 0; i < job.tasks.size(); ++i) {
    TaskFeatures f;
    f.group_tag = group_tag;
    f.submission_hour = static_cast<int>(((hours % 24) + 24) % 24);
    f.instance_count = job.tasks[i].instance_count;
    f.job_type = job.type;
    f.task_position = position[i];
    out.push_back(f);
  }
  return out;
}

std::size_t ClassifierEnsemble::dim() const {
  return params_.tag_buckets + params_.cross_buckets + kJobTypes + kNumeric;
}

SparseRow ClassifierEnsemble::encode(const TaskFeatures& f) const {
  SparseRow row;
  const auto tag_offset = std::uint32_t{0};
  const auto cross_offset = static_cast<std::uint32_t>(params_.tag_buckets);
  const auto type_offset = static_cast<std::uint32_t>(params_.tag_buckets + params_.cross_buckets);
  const auto num_offset = type_offset + kJobTypes;

  if (auto it = tag_vocab_.find(f.group_tag); it != tag_vocab_.end()) {
    row.emplace_back(tag_offset + it->second, 1.0);
  } else if (tag_overflow_) {
    row.emplace_back(tag_offset + static_cast<std::uint32_t>(
                                      mix64(static_cast<std::uint64_t>(f.group_tag)) % params_.tag_buckets),
                     1.0);
  }
  const auto cross_key = std::make_pair(f.group_tag, f.task_position);
  if (auto it = cross_vocab_.find(cross_key); it != cross_vocab_.end()) {
    row.emplace_back(cross_offset + it->second, 1.0);
  } else if (cross_overflow_) {
    const auto h = hash_combine(static_cast<std::uint64_t>(f.group_tag), static_cast<std::uint64_t>(f.task_position));
    row.emplace_back(cross_offset + static_cast<std::uint32_t>(h % params_.cross_buckets), 1.0);
  }
  row.emplace_back(type_offset + static_cast<std::uint32_t>(f.job_type), 1.0);
  const auto raw = numeric_raw(f);
  for (int i = 0; i < kNumeric; ++i) {
    const auto idx = static_cast<std::size_t>(i);
    row.emplace_back(num_offset + static_cast<std::uint32_t>(i),
                     (raw[idx] - numeric_mean_[idx]) / numeric_scale_[idx]);
  }
  return row;
}

ClassifierEnsemble ClassifierEnsemble::train(std::span<const LabeledTask> dataset, const ClassifierParams& params) {
  if (dataset.empty()) throw Error("classifier training set is empty");
  if (params.tag_buckets == 0 || params.cross_buckets == 0) throw ConfigError("bucket counts must be positive");

  std::vector<LabeledTask> rows(dataset.begin(), dataset.end());
  std::sort(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return sort_key(a) < sort_key(b); });

  ClassifierEnsemble model;
  model.params_ = params;

  std::vector<std::int64_t> tags;
  std::vector<std::pair<std::int64_t, int>> crosses;
  tags.reserve(rows.size());
  crosses.reserve(rows.size());
  for (const auto& r : rows) {
    tags.push_back(r.features.group_tag);
    crosses.emplace_back(r.features.group_tag, r.features.task_position);
  }
  model.tag_vocab_ = build_vocab(tags, params.tag_buckets, model.tag_overflow_);
  model.cross_vocab_ = build_vocab(crosses, params.cross_buckets, model.cross_overflow_);

  for (int i = 0; i < kNumeric; ++i) {
    std::vector<double> col;
    col.reserve(rows.size());
    for (const auto& r : rows) col.push_back(numeric_raw(r.features)[static_cast<std::size_t>(i)]);
    const double sd = population_stddev(col);
    model.numeric_mean_[static_cast<std::size_t>(i)] = mean(col);
    model.numeric_scale_[static_cast<std::size_t>(i)] = sd > 0.0 ? sd : 1.0;
  }

  std::vector<SparseRow> encoded;
  encoded.reserve(rows.size());
  std::vector<int> cpu, mem, span;
  for (const auto& r : rows) {
    encoded.push_back(model.encode(r.features));
    cpu.push_back(r.category.cpu_class);
    mem.push_back(r.category.mem_class);
    span.push_back(r.category.makespan_class);
  }
  model.cpu_model_ = LinearOvrSvm::train(encoded, cpu, kCpuClasses, model.dim(), params.svm);
  model.mem_model_ = LinearOvrSvm::train(encoded, mem, kMemClasses, model.dim(), params.svm);
  model.makespan_model_ = LinearOvrSvm::train(encoded, span, kMakespanClasses, model.dim(), params.svm);
  model.trained_ = true;
  return model;
}

TaskCategory ClassifierEnsemble::predict(const TaskFeatures& features) const {
  if (!trained_) throw Error("classifier is not trained");
  const auto row = encode(features);
  return {cpu_model_.predict(row), mem_model_.predict(row), makespan_model_.predict(row)};
}

nlohmann::json ClassifierEnsemble::to_json() const {
  if (!trained_) throw Error("classifier is not trained");
  nlohmann::json tags = nlohmann::json::array();
  for (const auto& [tag, idx] : tag_vocab_) tags.push_back({tag, idx});
  nlohmann::json crosses = nlohmann::json::array();
  for (const auto& [key, idx] : cross_vocab_) crosses.push_back({key.first, key.second, idx});
  return {{"version", kFormatVersion},
          {"kind", "task_classifier"},
          {"tag_buckets", params_.tag_buckets},
          {"cross_buckets", params_.cross_buckets},
          {"tag_overflow", tag_overflow_},
          {"cross_overflow", cross_overflow_},
          {"tag_vocab", tags},
          {"cross_vocab", crosses},
          {"numeric_mean", numeric_mean_},
          {"numeric_scale", numeric_scale_},
          {"svm", {{"c", params_.svm.c}, {"max_epochs", params_.svm.max_epochs},
                   {"tolerance", params_.svm.tolerance}, {"seed", params_.svm.seed}}},
          {"cpu", cpu_model_.to_json()},
          {"mem", mem_model_.to_json()},
          {"makespan", makespan_model_.to_json()}};
}

ClassifierEnsemble ClassifierEnsemble::from_json(const nlohmann::json& j) {
  if (j.at("version").get<int>() != kFormatVersion) throw Error("unsupported classifier model version");
  ClassifierEnsemble m;
  m.params_.tag_buckets = j.at("tag_buckets").get<std::size_t>();
  m.params_.cross_buckets = j.at("cross_buckets").get<std::size_t>();
  m.tag_overflow_ = j.at("tag_overflow").get<bool>();
  m.cross_overflow_ = j.at("cross_overflow").get<bool>();
  for (const auto& e : j.at("tag_vocab")) m.tag_vocab_.emplace(e.at(0).get<std::int64_t>(), e.at(1).get<std::uint32_t>());
  for (const auto& e : j.at("cross_vocab")) {
    m.cross_vocab_.emplace(std::make_pair(e.at(0).get<std::int64_t>(), e.at(1).get<int>()), e.at(2).get<std::uint32_t>());
  }
  m.numeric_mean_ = j.at("numeric_mean").get<std::array<double, 3>>();
  m.numeric_scale_ = j.at("numeric_scale").get<std::array<double, 3>>();
  const auto& svm = j.at("svm");
  m.params_.svm.c = svm.at("c").get<double>();
  m.params_.svm.max_epochs = svm.at("max_epochs").get<int>();
  m.params_.svm.tolerance = svm.at("tolerance").get<double>();
  m.params_.svm.seed = svm.at("seed").get<std::uint64_t>();
  m.cpu_model_ = LinearOvrSvm::from_json(j.at("cpu"));
  m.mem_model_ = LinearOvrSvm::from_json(j.at("mem"));
  m.makespan_model_ = LinearOvrSvm::from_json(j.at("makespan"));
  m.trained_ = true;
  return m;
}

std::string ClassifierMetrics::csv_header() {
  return "tasks,cpu_acc,mem_acc,makespan_acc,overall_acc,instance_weighted_acc,"
         "cpu_instance_acc,mem_instance_acc,makespan_instance_acc,"
         "cpu_boundary_acc,mem_boundary_acc,makespan_boundary_acc";
}

std::string ClassifierMetrics::csv_row() const {
  std::ostringstream os;
  os.precision(6);
  os << tasks;
  for (double v : per_dim_acc) os << ',' << v;
  os << ',' << overall_acc << ',' << instance_weighted_acc;
  for (double v : instance_weighted_per_dim) os << ',' << v;
  for (double v : boundary_tolerant_acc) os << ',' << v;
  return os.str();
}

ClassifierMetrics evaluate(const ClassifierEnsemble& model, std::span<const LabeledTask> testset) {
  if (testset.empty()) throw Error("classifier test set is empty");
  ClassifierMetrics m;
  m.tasks = testset.size();
  std::array<double, 3> correct{}, tolerant{}, inst_correct{};
  double all = 0.0, inst_all = 0.0, inst_total = 0.0;
  for (const auto& t : testset) {
    const auto pred = model.predict(t.features);
    const std::array<int, 3> p{pred.cpu_class, pred.mem_class, pred.makespan_class};
    const std::array<int, 3> a{t.category.cpu_class, t.category.mem_class, t.category.makespan_class};
    const double w = static_cast<double>(std::max(1, t.features.instance_count));
    bool every = true;
    for (std::size_t d = 0; d < 3; ++d) {
      const bool ok = p[d] == a[d];
      every = every && ok;
      if (ok) {
        correct[d] += 1.0;
        inst_correct[d] += w;
      }
      if (std::abs(p[d] - a[d]) <= 1) tolerant[d] += 1.0;
    }
    if (every) {
      all += 1.0;
      inst_all += w;
    }
    inst_total += w;
  }
  const double n = static_cast<double>(testset.size());
  for (std::size_t d = 0; d < 3; ++d) {
    m.per_dim_acc[d] = correct[d] / n;
    m.boundary_tolerant_acc[d] = tolerant[d] / n;
    m.instance_weighted_per_dim[d] = inst_correct[d] / inst_total;
  }
  m.overall_acc = all / n;
  m.instance_weighted_acc = inst_all / inst_total;
  return m;
}

}  // namespace pism
