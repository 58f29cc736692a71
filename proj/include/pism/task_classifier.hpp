#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "pism/characterization.hpp"
#include "pism/svm.hpp"
#include "pism/types.hpp"

namespace pism {

// Everything here is known before the task runs.
struct TaskFeatures {
  std::int64_t group_tag = 0;
  int submission_hour = 0;  // 0..23, hours since trace epoch mod 24
  int instance_count = 1;
  JobType job_type = JobType::SQL;
  int task_position = 0;  // index in Dag::topological_order()
};

TaskFeatures extract_features(const BeJob& job, std::size_t task_index, std::int64_t group_tag);

// Same as above for every task of the job at once (one topological sort).
std::vector<TaskFeatures> extract_job_features(const BeJob& job, std::int64_t group_tag);

struct LabeledTask {
  TaskFeatures features;
  TaskCategory category;
};

struct ClassifierParams {
  SvmParams svm;
  std::size_t tag_buckets = 1024;
  std::size_t cross_buckets = 4096;
};

class ClassifierEnsemble {
 public:
  static constexpr int kFormatVersion = 1;

  ClassifierEnsemble() = default;

  // Throws Error on an empty dataset. Row order does not affect the result.
  static ClassifierEnsemble train(std::span<const LabeledTask> dataset, const ClassifierParams& params);

  bool trained() const { return trained_; }

  // Throws Error when untrained.
  TaskCategory predict(const TaskFeatures& features) const;

  nlohmann::json to_json() const;
  static ClassifierEnsemble from_json(const nlohmann::json& j);

 private:
  SparseRow encode(const TaskFeatures& f) const;
  std::size_t dim() const;

  bool trained_ = false;
  ClassifierParams params_;
  std::map<std::int64_t, std::uint32_t> tag_vocab_;
  std::map<std::pair<std::int64_t, int>, std::uint32_t> cross_vocab_;
  bool tag_overflow_ = false;
  bool cross_overflow_ = false;
  std::array<double, 3> numeric_mean_{};
  std::array<double, 3> numeric_scale_{1.0, 1.0, 1.0};
  LinearOvrSvm cpu_model_;
  LinearOvrSvm mem_model_;
  LinearOvrSvm makespan_model_;
};

struct ClassifierMetrics {
  std::size_t tasks = 0;
  std::array<double, 3> per_dim_acc{};  // cpu, mem, makespan
  double overall_acc = 0.0;             // correct in all three dimensions
  double instance_weighted_acc = 0.0;   // overall, weighted by instance_count
  std::array<double, 3> instance_weighted_per_dim{};
  std::array<double, 3> boundary_tolerant_acc{};  // |pred - true| <= 1 counts as correct

  static std::string csv_header();
  std::string csv_row() const;
};

ClassifierMetrics evaluate(const ClassifierEnsemble& model, std::span<const LabeledTask> testset);

}  // namespace pism
