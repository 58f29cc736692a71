#include <gtest/gtest.h>

#include <random>
#include <set>

#include "pism/dag_kernel.hpp"
#include "support.hpp"

namespace pism {
namespace {

using test::permuted_copy;
using test::random_dag;

TEST(KernelProperty, SymmetricBoundedAndMatchesStringOracle) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 1200; ++trial) {
    const Dag a = random_dag(rng);
    const Dag b = random_dag(rng);
    const int h = static_cast<int>(rng() % 4);
    const auto kab = kernel(a, b, h);
    const auto kaa = kernel(a, a, h);
    const auto kbb = kernel(b, b, h);
    ASSERT_EQ(kab, kernel(b, a, h));
    ASSERT_GE(kab, 0);
    ASSERT_LE(static_cast<long double>(kab) * kab, static_cast<long double>(kaa) * kbb);
    ASSERT_EQ(kab, test::string_kernel(a, b, h)) << "trial " << trial;
    ASSERT_EQ(kaa, test::string_kernel(a, a, h));
  }
}

TEST(KernelProperty, InvariantUnderRelabelingAndInsertionOrder) {
  std::mt19937_64 rng(12);
  for (int trial = 0; trial < 1000; ++trial) {
    const Dag a = random_dag(rng, 10);
    const Dag p = permuted_copy(a, rng);
    ASSERT_EQ(wl_features(a), wl_features(p));
    GroupRegistry reg;
    BeJob ja{"a", JobType::SQL, 0.0, a, {}};
    BeJob jp{"p", JobType::SQL, 0.0, p, {}};
    ASSERT_EQ(reg.assign(ja), reg.assign(jp));
    ASSERT_EQ(reg.groups().size(), 1u);
  }
}

TEST(KernelProperty, GramMatricesArePositiveSemidefinite) {
  std::mt19937_64 rng(13);
  std::uniform_int_distribution<int> coef(-3, 3);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<Dag> g;
    for (int i = 0; i < 6; ++i) g.push_back(random_dag(rng, 6, 0.5));
    std::vector<std::vector<std::int64_t>> k(6, std::vector<std::int64_t>(6));
    for (int i = 0; i < 6; ++i) {
      for (int j = 0; j < 6; ++j) k[i][j] = kernel(g[i], g[j]);
    }
    // Integer quadratic forms are exact, so any negative value is a real violation.
    for (int v = 0; v < 200; ++v) {
      std::vector<std::int64_t> x(6);
      for (auto& xi : x) xi = coef(rng);
      std::int64_t q = 0;
      for (int i = 0; i < 6; ++i) {
        for (int j = 0; j < 6; ++j) q += x[i] * k[i][j] * x[j];
      }
      ASSERT_GE(q, 0);
    }
  }
}

TEST(KernelProperty, ClusteringIsOrderIndependentAndIdempotent) {
  std::mt19937_64 rng(14);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<Dag> templates;
    for (int i = 0; i < 5; ++i) templates.push_back(random_dag(rng, 7));
    std::vector<BeJob> jobs;
    for (int j = 0; j < 40; ++j) {
      BeJob job;
      job.job_id = "j" + std::to_string(j);
      job.dag = permuted_copy(templates[rng() % templates.size()], rng);
      jobs.push_back(std::move(job));
    }
    auto partition = [](const std::vector<DagGroup>& groups) {
      std::set<std::set<std::string>> out;
      for (const auto& g : groups) out.emplace(g.member_job_ids.begin(), g.member_job_ids.end());
      return out;
    };
    const auto groups = cluster_jobs(jobs);
    ASSERT_LE(groups.size(), templates.size());
    for (const auto& g : groups) {
      ASSERT_EQ(g.tag, inner_product(g.representative, g.representative));
    }
    auto shuffled = jobs;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    ASSERT_EQ(partition(groups), partition(cluster_jobs(shuffled)));

    // Assigning every job a second time finds its existing group.
    GroupRegistry reg;
    std::vector<std::size_t> first;
    for (const auto& j : jobs) first.push_back(reg.assign(j));
    const auto n_groups = reg.groups().size();
    for (std::size_t i = 0; i < jobs.size(); ++i) ASSERT_EQ(reg.assign(jobs[i], false), first[i]);
    ASSERT_EQ(reg.groups().size(), n_groups);

    // Members of one group have identical features; members of different groups do not.
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      for (std::size_t j = i + 1; j < jobs.size(); ++j) {
        ASSERT_EQ(first[i] == first[j], wl_features(jobs[i].dag) == wl_features(jobs[j].dag));
      }
    }
  }
}

}  // namespace
}  // namespace pism
