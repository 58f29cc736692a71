#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "pism/dag_kernel.hpp"
#include "pism/error.hpp"
#include "pism/svm.hpp"
#include "pism/task_classifier.hpp"
#include "support.hpp"

namespace pism {
namespace {

LabeledTask labeled(std::int64_t tag, int position, int hour, int count, TaskCategory c) {
  LabeledTask t;
  t.features.group_tag = tag;
  t.features.task_position = position;
  t.features.submission_hour = hour;
  t.features.instance_count = count;
  t.category = c;
  return t;
}

// Two templates with two tasks each; category is a function of (tag, position).
std::vector<LabeledTask> toy_dataset() {
  std::vector<LabeledTask> out;
  for (int rep = 0; rep < 12; ++rep) {
    const int hour = rep % 24;
    out.push_back(labeled(28, 0, hour, 10 + rep, {0, 1, 0}));
    out.push_back(labeled(28, 1, hour, 3, {2, 4, 3}));
    out.push_back(labeled(18, 0, hour, 50 + rep, {1, 2, 1}));
    out.push_back(labeled(18, 1, hour, 1, {0, 0, 2}));
  }
  return out;
}

TEST(Svm, SeparatesLinearData) {
  std::vector<SparseRow> rows;
  std::vector<int> labels;
  for (int i = 0; i < 40; ++i) {
    const double x = i / 40.0;
    rows.push_back({{0, x}, {1, 1.0 - x}});
    labels.push_back(x < 0.5 ? 0 : 1);
  }
  const auto m = LinearOvrSvm::train(rows, labels, 2, 2, SvmParams{10.0, 200, 1e-4, 1});
  int correct = 0;
  for (std::size_t i = 0; i < rows.size(); ++i) correct += m.predict(rows[i]) == labels[i];
  EXPECT_EQ(correct, 40);
  const auto back = LinearOvrSvm::from_json(m.to_json());
  for (const auto& r : rows) EXPECT_EQ(back.predict(r), m.predict(r));
}

TEST(Svm, SingleClassIsConstant) {
  const std::vector<SparseRow> rows{{{0, 1.0}}, {{0, -1.0}}};
  const std::vector<int> labels{2, 2};
  const auto m = LinearOvrSvm::train(rows, labels, 3, 1, SvmParams{});
  EXPECT_EQ(m.predict({{0, 5.0}}), 2);
  EXPECT_EQ(m.predict({}), 2);
}

TEST(TaskClassifier, ExtractFeatures) {
  BeJob job;
  job.job_id = "j";
  job.type = JobType::Algo;
  job.submission_time = 3600.0;
  job.dag = test::fan_in_out_dag();
  for (const auto& n : job.dag.nodes()) job.tasks.push_back(test::make_task(n.id, 1, 1, 1, 4));
  const auto f = extract_features(job, 3, 77);  // node "j"
  EXPECT_EQ(f.submission_hour, 1);
  EXPECT_EQ(f.task_position, 3);
  EXPECT_EQ(f.job_type, JobType::Algo);
  EXPECT_EQ(f.instance_count, 4);
  EXPECT_EQ(extract_features(job, 0, 77).group_tag, f.group_tag);
  job.submission_time = 25 * 3600.0 + 10;
  EXPECT_EQ(extract_features(job, 0, 77).submission_hour, 1);
  EXPECT_THROW(extract_features(job, 6, 77), Error);
}

TEST(TaskClassifier, MemorizesSeparableToySet) {
  const auto data = toy_dataset();
  const auto model = ClassifierEnsemble::train(data, ClassifierParams{});
  for (const auto& t : data) EXPECT_EQ(model.predict(t.features), t.category);
  const auto m = evaluate(model, data);
  EXPECT_DOUBLE_EQ(m.overall_acc, 1.0);
  EXPECT_DOUBLE_EQ(m.instance_weighted_acc, 1.0);
  for (std::size_t d = 0; d < 3; ++d) {
    EXPECT_DOUBLE_EQ(m.per_dim_acc[d], 1.0);
    EXPECT_DOUBLE_EQ(m.boundary_tolerant_acc[d], 1.0);
  }
}

TEST(TaskClassifier, DeterministicAndInRange) {
  const auto model = ClassifierEnsemble::train(toy_dataset(), ClassifierParams{});
  std::mt19937_64 rng(1);
  for (int i = 0; i < 200; ++i) {
    TaskFeatures f;
    f.group_tag = static_cast<std::int64_t>(rng() % 100);
    f.submission_hour = static_cast<int>(rng() % 24);
    f.instance_count = 1 + static_cast<int>(rng() % 500);
    f.task_position = static_cast<int>(rng() % 8);
    f.job_type = static_cast<JobType>(rng() % 4);
    const auto a = model.predict(f);
    EXPECT_EQ(a, model.predict(f));
    EXPECT_GE(a.flat_index(), 0);
    EXPECT_LT(a.flat_index(), kCategories);
  }
}

TEST(TaskClassifier, RowOrderDoesNotMatter) {
  auto data = toy_dataset();
  const auto a = ClassifierEnsemble::train(data, ClassifierParams{});
  std::mt19937_64 rng(9);
  std::shuffle(data.begin(), data.end(), rng);
  const auto b = ClassifierEnsemble::train(data, ClassifierParams{});
  EXPECT_EQ(a.to_json().dump(), b.to_json().dump());
}

TEST(TaskClassifier, SingleClassDimensionFallsBackToConstant) {
  std::vector<LabeledTask> data;
  for (int i = 0; i < 6; ++i) data.push_back(labeled(i % 2 ? 5 : 9, 0, i, 1, {1, i % 2 ? 3 : 0, 2}));
  const auto model = ClassifierEnsemble::train(data, ClassifierParams{});
  for (const auto& t : data) {
    EXPECT_EQ(model.predict(t.features).cpu_class, 1);
    EXPECT_EQ(model.predict(t.features).makespan_class, 2);
  }
}

TEST(TaskClassifier, Errors) {
  EXPECT_THROW(ClassifierEnsemble::train({}, ClassifierParams{}), Error);
  ClassifierEnsemble untrained;
  EXPECT_THROW(untrained.predict(TaskFeatures{}), Error);
  const auto model = ClassifierEnsemble::train(toy_dataset(), ClassifierParams{});
  EXPECT_THROW(evaluate(model, {}), Error);
}

TEST(TaskClassifier, JsonRoundTrip) {
  const auto data = toy_dataset();
  const auto model = ClassifierEnsemble::train(data, ClassifierParams{});
  const auto back = ClassifierEnsemble::from_json(model.to_json());
  for (const auto& t : data) EXPECT_EQ(back.predict(t.features), model.predict(t.features));
  auto j = model.to_json();
  j["version"] = 99;
  EXPECT_THROW(ClassifierEnsemble::from_json(j), Error);
}

TEST(TaskClassifier, EvaluateOffByOneBucket) {
  const auto model = ClassifierEnsemble::train(toy_dataset(), ClassifierParams{});
  std::vector<LabeledTask> test;
  for (int i = 0; i < 9; ++i) test.push_back(labeled(28, 0, 3, 11, {0, 1, 0}));
  test.push_back(labeled(28, 0, 3, 11, {1, 1, 0}));  // model says cpu 0
  const auto m = evaluate(model, test);
  EXPECT_DOUBLE_EQ(m.per_dim_acc[0], 0.9);
  EXPECT_DOUBLE_EQ(m.boundary_tolerant_acc[0], 1.0);
  EXPECT_DOUBLE_EQ(m.per_dim_acc[1], 1.0);
  EXPECT_DOUBLE_EQ(m.overall_acc, 0.9);
}

TEST(TaskClassifier, EvaluateInstanceWeighted) {
  const auto model = ClassifierEnsemble::train(toy_dataset(), ClassifierParams{});
  std::vector<LabeledTask> test;
  for (int i = 0; i < 10; ++i) test.push_back(labeled(28, 0, 3, 1, {0, 1, 0}));
  test.push_back(labeled(28, 0, 3, 100, {2, 4, 3}));
  const auto m = evaluate(model, test);
  EXPECT_DOUBLE_EQ(m.instance_weighted_acc, 10.0 / 110.0);
  EXPECT_DOUBLE_EQ(m.overall_acc, 10.0 / 11.0);
}

TEST(TaskClassifier, HoldoutOnTemplateConditionedData) {
  // Category is a deterministic function of (template, position); >= 10 jobs per template.
  std::mt19937_64 rng(11);
  std::vector<Dag> templates;
  while (templates.size() < 8) templates.push_back(test::random_dag(rng, 6, 0.4));
  std::vector<std::vector<TaskCategory>> truth;
  for (const auto& t : templates) {
    std::vector<TaskCategory> cats;
    for (std::size_t i = 0; i < t.size(); ++i)
      cats.push_back(TaskCategory::from_flat(static_cast<int>(rng() % kCategories)));
    truth.push_back(cats);
  }
  auto make = [&](int jobs_per_template) {
    std::vector<LabeledTask> out;
    for (std::size_t t = 0; t < templates.size(); ++t) {
      const auto tag = kernel(templates[t], templates[t]) * 1000 + static_cast<std::int64_t>(t);
      const auto order = templates[t].topological_order();
      for (int j = 0; j < jobs_per_template; ++j) {
        for (std::size_t p = 0; p < order.size(); ++p) {
          out.push_back(labeled(tag, static_cast<int>(p), static_cast<int>(rng() % 24),
                                1 + static_cast<int>(rng() % 40), truth[t][order[p]]));
        }
      }
    }
    return out;
  };
  const auto model = ClassifierEnsemble::train(make(12), ClassifierParams{});
  const auto m = evaluate(model, make(5));
  for (std::size_t d = 0; d < 3; ++d) EXPECT_GE(m.per_dim_acc[d], 0.95) << "dimension " << d;
}

}  // namespace
}  // namespace pism
