#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "pism/analysis.hpp"
#include "pism/error.hpp"
#include "pism/generator.hpp"
#include "pism/trace_io.hpp"
#include "support.hpp"

namespace pism {
namespace {

using test::TempDir;
using test::read;

const char* kTopology =
    "# server,server_id,cpu_capacity,mem_capacity\n"
    "horizon,7200\n"
    "server,s1,96,512\n"
    "server,s0,96,512\n"
    "lcs,i0,checkout,s0,4,8\n"
    "lcs,i1,checkout,s1,4,8\n"
    "lcs,i2,search,s1,2,4\n";

const char* kJobs =
    "job_id,job_type,submission_time,dag\n"
    "b,SQL,300,b-m:Map;b-r:Reduce|b-m>b-r\n"
    "a,Algo,100,a-m:Map|\n"
    "c,SQLRT,200,c-m:Map;c-j:Join|c-m>c-j\n";

const char* kTasks =
    "task_id,job_id,operation_label,instance_count,cpu,mem,makespan\n"
    "b-r,b,Reduce,2,1.0,2.0,30\n"
    "b-m,b,Map,4,0.4,1.0,10\n"
    "a-m,a,Map,1,2.0,20.0,700\n"
    "c-m,c,Map,3,0.5,0.5,5\n"
    "c-j,c,Join,1,1.5,4.0,40\n";

TEST(TraceIo, LoadsAndSortsFixture) {
  TempDir dir;
  dir.write("topology.csv", kTopology);
  dir.write("jobs.csv", kJobs);
  dir.write("tasks.csv", kTasks);
  const auto t = load_trace(dir.path(), TraceFormat::Csv);
  ASSERT_EQ(t.jobs.size(), 3u);
  EXPECT_EQ(t.jobs[0].job_id, "a");
  EXPECT_EQ(t.jobs[1].job_id, "c");
  EXPECT_EQ(t.jobs[2].job_id, "b");
  EXPECT_EQ(t.jobs[2].tasks[0].task_id, "b-m");  // tasks follow DAG node order
  EXPECT_EQ(t.servers[0].server_id, "s0");
  EXPECT_EQ(t.services.size(), 2u);
  EXPECT_EQ(t.servers[1].lcs_instances.size(), 2u);
  EXPECT_EQ(t.horizon, 7200.0);
  EXPECT_EQ(t.total_instances(), 11u);
}

TEST(TraceIo, RoundTripBothFormats) {
  TempDir src;
  src.write("topology.csv", kTopology);
  src.write("jobs.csv", kJobs);
  src.write("tasks.csv", kTasks);
  const auto t = load_trace(src.path(), TraceFormat::Csv);
  for (auto f : {TraceFormat::Csv, TraceFormat::Jsonl}) {
    TempDir out;
    save_trace(t, out.path(), f);
    const auto back = load_trace(out.path(), f);
    TempDir again;
    save_trace(back, again.path(), f);
    for (auto stem : {"jobs", "tasks", "topology"}) {
      const std::string name = std::string(stem) + (f == TraceFormat::Csv ? ".csv" : ".jsonl");
      EXPECT_EQ(read(out.path() / name), read(again.path() / name)) << name;
    }
    ASSERT_EQ(back.jobs.size(), t.jobs.size());
    for (std::size_t i = 0; i < t.jobs.size(); ++i) {
      EXPECT_EQ(back.jobs[i].job_id, t.jobs[i].job_id);
      EXPECT_EQ(encode_dag(back.jobs[i].dag), encode_dag(t.jobs[i].dag));
      for (std::size_t k = 0; k < t.jobs[i].tasks.size(); ++k) {
        EXPECT_EQ(back.jobs[i].tasks[k].cpu, t.jobs[i].tasks[k].cpu);
        EXPECT_EQ(back.jobs[i].tasks[k].makespan, t.jobs[i].tasks[k].makespan);
      }
    }
  }
}

TEST(TraceIo, EdgeToMissingNodeNamesJob) {
  TempDir dir;
  dir.write("topology.csv", kTopology);
  dir.write("jobs.csv", "job_id,job_type,submission_time,dag\nbroken,SQL,1,x:Map|x>y\n");
  dir.write("tasks.csv", "task_id,job_id,operation_label,instance_count,cpu,mem,makespan\n");
  try {
    load_trace(dir.path(), TraceFormat::Csv);
    FAIL() << "expected an error";
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("broken"), std::string::npos);
    EXPECT_EQ(e.line(), 2u);
    EXPECT_EQ(e.file(), "jobs.csv");
  }
}

TEST(TraceIo, DuplicateInstanceId) {
  TempDir dir;
  dir.write("topology.csv", std::string(kTopology) + "lcs,i0,search,s1,1,1\n");
  dir.write("jobs.csv", kJobs);
  dir.write("tasks.csv", kTasks);
  EXPECT_THROW(load_trace(dir.path(), TraceFormat::Csv), ValidationError);
}

TEST(TraceIo, MalformedNumbersCarryLine) {
  TempDir dir;
  dir.write("topology.csv", kTopology);
  dir.write("jobs.csv", kJobs);
  dir.write("tasks.csv", std::string(kTasks) + "z,a,Map,one,1,1,1\n");
  try {
    load_trace(dir.path(), TraceFormat::Csv);
    FAIL() << "expected an error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 7u);
  }
  EXPECT_THROW(load_trace(dir.path() / "nope", TraceFormat::Csv), Error);
}

TEST(TraceIo, CycleRejected) {
  Trace t;
  BeJob j;
  j.job_id = "cyc";
  j.dag = decode_dag("p:Map;q:Map|p>q;q>p");
  j.tasks = {test::make_task("p", 1, 1, 1), test::make_task("q", 1, 1, 1)};
  t.jobs.push_back(j);
  EXPECT_THROW(t.finalize(), ValidationError);
}

TEST(Generator, DeterministicBytes) {
  GenConfig g;
  g.horizon = 86400.0;
  TempDir a, b;
  save_trace(generate_synthetic_trace(g, 7), a.path(), TraceFormat::Csv);
  save_trace(generate_synthetic_trace(g, 7), b.path(), TraceFormat::Csv);
  for (auto f : {"jobs.csv", "tasks.csv", "topology.csv"}) EXPECT_EQ(read(a.path() / f), read(b.path() / f)) << f;
  TempDir c;
  save_trace(generate_synthetic_trace(g, 8), c.path(), TraceFormat::Csv);
  EXPECT_NE(read(a.path() / "jobs.csv"), read(c.path() / "jobs.csv"));
}

TEST(Generator, DefaultCalibration) {
  const GenConfig g;
  const auto t = generate_synthetic_trace(g, 1);
  double instances = 0.0, short_instances = 0.0;
  for (const auto& j : t.jobs) {
    for (const auto& task : j.tasks) {
      instances += task.instance_count;
      if (task.makespan < 60.0) short_instances += task.instance_count;
    }
  }
  const double rate = instances / static_cast<double>(g.servers) / (g.horizon / 60.0);
  EXPECT_NEAR(rate, g.arrivals_per_server_minute, 0.2 * g.arrivals_per_server_minute);
  EXPECT_GE(short_instances / instances, 0.80);

  // 30 structural groups with roughly equal job counts.
  const auto groups = cluster_jobs(t.jobs);
  ASSERT_EQ(groups.size(), g.templates);
  const double expected = static_cast<double>(t.jobs.size()) / static_cast<double>(g.templates);
  for (const auto& grp : groups) EXPECT_NEAR(static_cast<double>(grp.member_job_ids.size()), expected, 0.25 * expected);

  const auto rep = analyze_repeatability(t);
  EXPECT_EQ(rep.dag_groups, g.templates);
  EXPECT_EQ(rep.jobs, t.jobs.size());

  for (const auto& s : t.servers) {
    double cpu = 0.0;
    for (auto i : s.lcs_instances) cpu += t.lcs_instances[i].cpu_quota;
    EXPECT_LE(cpu, 0.5 * s.cpu_capacity);
  }
}

TEST(Generator, InfeasibleLoadRejected) {
  GenConfig g = test::small_gen_config();
  g.arrivals_per_server_minute = 1e6;
  EXPECT_THROW(generate_synthetic_trace(g, 1), ConfigError);
  g = test::small_gen_config();
  g.servers = 0;
  EXPECT_THROW(generate_synthetic_trace(g, 1), ConfigError);
}

TEST(Analysis, UtilizationCdf) {
  Trace t;
  t.servers = {{"a", 100, 100, {}}, {"b", 100, 100, {}}};
  t.utilization = {{0, 0, 20, 0}, {0, 1, 60, 20}};
  const auto cdf = analyze_utilization_cdf(t, UtilEntity::Server);
  ASSERT_EQ(cdf.size(), 2u);
  EXPECT_DOUBLE_EQ(cdf[0].first, 0.2);
  EXPECT_DOUBLE_EQ(cdf[0].second, 0.5);
  EXPECT_DOUBLE_EQ(cdf[1].first, 0.8);
  EXPECT_DOUBLE_EQ(cdf[1].second, 1.0);
  t.utilization = {{0, 0, 50, 0}, {60, 0, 50, 0}};
  const auto one = analyze_utilization_cdf(t, UtilEntity::Bej);
  ASSERT_EQ(one.size(), 1u);
  EXPECT_EQ(one[0], (std::pair<double, double>{0.5, 1.0}));
  t.utilization.clear();
  EXPECT_THROW(analyze_utilization_cdf(t, UtilEntity::Server), Error);
}

TEST(Analysis, CvAndRepeatability) {
  Trace t;
  t.servers = {{"s", 96, 512, {}}};
  LcsInstance a{"a", "svc", "s", 1, 0, {{0, 50}, {60, 50}}, 0, 0};
  LcsInstance b{"b", "svc", "s", 1, 0, {{0, 100}, {60, 300}}, 0, 0};
  LcsInstance c{"c", "svc", "s", 1, 0, {{0, 100}}, 0, 0};
  t.lcs_instances = {a, b, c};
  t.finalize();
  const auto r = analyze_cv(t, "svc");
  EXPECT_EQ(r.excluded, 1u);
  ASSERT_EQ(r.values.size(), 2u);
  EXPECT_DOUBLE_EQ(r.values[0], 0.0);
  EXPECT_DOUBLE_EQ(r.values[1], 0.5);
  EXPECT_THROW(analyze_cv(t, "nope"), Error);

  Trace jobs;
  for (int i = 0; i < 10; ++i) {
    BeJob j;
    j.job_id = "j" + std::to_string(i);
    j.dag = test::fan_in_out_dag();
    jobs.jobs.push_back(j);
  }
  auto rep = analyze_repeatability(jobs);
  EXPECT_EQ(rep.dag_groups, 1u);
  EXPECT_EQ(rep.jobs, 10u);
  EXPECT_EQ(rep.infrequent_groups, 0u);
  EXPECT_EQ(rep.unique_groups, 0u);
  jobs.jobs.resize(3);
  jobs.jobs[1].dag = test::fan_in_out_missing_map();
  jobs.jobs[2].dag = test::make_dag({{"x", OpLabel::Other}}, {});
  rep = analyze_repeatability(jobs);
  EXPECT_EQ(rep.dag_groups, 3u);
  EXPECT_EQ(rep.unique_groups, 3u);
  EXPECT_EQ(rep.infrequent_jobs, 3u);
}

}  // namespace
}  // namespace pism
