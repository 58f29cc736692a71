#include <gtest/gtest.h>

#include <sstream>

#include "cli.hpp"
#include "pism/config.hpp"
#include "pism/error.hpp"
#include "support.hpp"

namespace pism {
namespace {

using test::TempDir;

int cli(std::vector<std::string> args, std::string* out = nullptr) {
  args.insert(args.begin(), "pism");
  ::testing::internal::CaptureStdout();
  const int code = cli::run(args);
  const auto text = ::testing::internal::GetCapturedStdout();
  if (out) *out = text;
  return code;
}

const char* kSmallConfig =
    "gen.servers = 8\n"
    "gen.services = 5\n"
    "gen.templates = 6\n"
    "gen.horizon = 14400\n"
    "gen.arrivals_per_server_minute = 8\n"
    "gen.lcs_per_server = 3\n"
    "sim.split = 7200\n"
    "sim.warmup = 600\n"
    "seed = 3\n";

TEST(Config, ParseAndOverride) {
  std::istringstream in("# comment\n\nseed = 11\nscoring.k = 4\nscheduler.list = random, spread+pism\n");
  const auto kv = KeyValueConfig::parse(in);
  const auto rc = RunConfig::from(kv);
  EXPECT_EQ(rc.seed, 11u);
  EXPECT_EQ(rc.k, 4);
  EXPECT_EQ(rc.schedulers, (std::vector<SchedulerKind>{SchedulerKind::Random, SchedulerKind::SpreadPism}));
  EXPECT_EQ(rc.gen.servers, 50u);
}

TEST(Config, Errors) {
  std::istringstream unknown("gen.bogus = 1\n");
  EXPECT_THROW(RunConfig::from(KeyValueConfig::parse(unknown)), ConfigError);
  std::istringstream malformed("seed 3\n");
  EXPECT_THROW(KeyValueConfig::parse(malformed), ParseError);
  std::istringstream bad_number("scoring.k = ten\n");
  EXPECT_THROW(RunConfig::from(KeyValueConfig::parse(bad_number)), ConfigError);
  std::istringstream bad_list("thresholds.alpha = 1\n");
  EXPECT_THROW(RunConfig::from(KeyValueConfig::parse(bad_list)), ConfigError);
  RunConfig rc;
  rc.warmup = rc.split;
  EXPECT_THROW(rc.validate(), ConfigError);
}

TEST(Config, CanonicalTextRoundTrips) {
  RunConfig rc;
  rc.seed = 99;
  rc.gen.servers = 12;
  std::istringstream in(rc.canonical_text());
  const auto back = RunConfig::from(KeyValueConfig::parse(in));
  EXPECT_EQ(back.hash(), rc.hash());
  EXPECT_EQ(back.canonical_text(), rc.canonical_text());
  EXPECT_NE(RunConfig{}.hash(), rc.hash());
  EXPECT_EQ(rc.hash().size(), 16u);
  // Every documented default parses back to the defaults.
  std::istringstream defaults(default_config_text());
  EXPECT_EQ(RunConfig::from(KeyValueConfig::parse(defaults)).hash(), RunConfig{}.hash());
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(cli({}), cli::kExitUsage);
  EXPECT_EQ(cli({"bogus"}), cli::kExitUsage);
  EXPECT_EQ(cli({"generate"}), cli::kExitUsage);  // no --out
  EXPECT_EQ(cli({"generate", "--out", "/tmp/x", "--format", "xml"}), cli::kExitUsage);
  EXPECT_EQ(cli({"--help"}), cli::kExitOk);
  TempDir dir;
  dir.write("bad.cfg", "scoring.k = 1\n");
  EXPECT_EQ(cli({"generate", "--config", (dir.path() / "bad.cfg").string(), "--out", dir.path().string()}),
            cli::kExitUsage);
}

TEST(Cli, GenerateIsReproducible) {
  TempDir dir;
  dir.write("small.cfg", kSmallConfig);
  const auto cfg = (dir.path() / "small.cfg").string();
  ASSERT_EQ(cli({"generate", "--config", cfg, "--out", (dir.path() / "a").string()}), cli::kExitOk);
  ASSERT_EQ(cli({"generate", "--config", cfg, "--out", (dir.path() / "b").string()}), cli::kExitOk);
  for (auto f : {"jobs.csv", "tasks.csv", "topology.csv", "manifest.json"}) {
    ASSERT_TRUE(std::filesystem::exists(dir.path() / "a" / f)) << f;
    EXPECT_EQ(test::read(dir.path() / "a" / f), test::read(dir.path() / "b" / f)) << f;
  }
  // Output path is an existing regular file.
  EXPECT_EQ(cli({"generate", "--config", cfg, "--out", cfg}), cli::kExitRuntime);
}

TEST(Cli, AnalyzeWritesTables) {
  TempDir dir;
  dir.write("small.cfg", kSmallConfig);
  const auto cfg = (dir.path() / "small.cfg").string();
  const auto trace = (dir.path() / "t").string();
  ASSERT_EQ(cli({"generate", "--config", cfg, "--out", trace, "--format", "jsonl"}), cli::kExitOk);
  const auto out = (dir.path() / "a").string();
  for (auto which : {"utilization", "cv", "repeatability"}) {
    EXPECT_EQ(cli({"analyze", "--config", cfg, "--trace", trace, "--which", which, "--out", out}), cli::kExitOk);
  }
  const auto rep = test::read(dir.path() / "a" / "repeatability.csv");
  EXPECT_NE(rep.find("\n6,"), std::string::npos) << rep;
  EXPECT_FALSE(test::read(dir.path() / "a" / "utilization_server.csv").empty());
  EXPECT_EQ(cli({"analyze", "--trace", (dir.path() / "missing").string()}), cli::kExitRuntime);
}

TEST(Cli, ExperimentAndValidate) {
  TempDir dir;
  dir.write("small.cfg", kSmallConfig);
  const auto cfg = (dir.path() / "small.cfg").string();
  const auto out = dir.path() / "exp";
  ASSERT_EQ(cli({"experiment", "--config", cfg, "--out", out.string(), "--schedulers", "random,pism", "--emit-logs"}),
            cli::kExitOk);
  for (auto f : {"report_random.json", "report_pism.json", "comparison.csv", "tails.csv", "classifier_metrics.csv",
                 "scoring_metrics.csv", "config.txt", "manifest.json", "models/classifier.json", "models/scoring.json",
                 "models/groups.jsonl", "events.pism.jsonl", "decisions.pism.jsonl"}) {
    EXPECT_TRUE(std::filesystem::exists(out / f)) << f;
  }
  const auto cmp = test::read(out / "comparison.csv");
  const auto row = cmp.substr(cmp.find("\npism,random,") + 1);
  std::vector<std::string> cols;
  std::stringstream ss(row.substr(0, row.find('\n')));
  for (std::string c; std::getline(ss, c, ',');) cols.push_back(c);
  ASSERT_GE(cols.size(), 5u);
  EXPECT_LT(std::stod(cols[4]), 0.0) << cmp;

  std::string text;
  EXPECT_EQ(cli({"validate", out.string()}, &text), cli::kExitOk) << text;
  EXPECT_NE(text.find("PASS events.pism.jsonl"), std::string::npos);

  // Corrupt the event log: drop the first instance end.
  auto events = test::read(out / "events.pism.jsonl");
  const auto hit = events.find("\"kind\":\"end\"");
  ASSERT_NE(hit, std::string::npos);
  const auto at = events.rfind('\n', hit) + 1;
  events.erase(at, events.find('\n', at) - at + 1);
  dir.write("exp/events.pism.jsonl", events);
  EXPECT_EQ(cli({"validate", out.string()}, &text), cli::kExitValidation);
  EXPECT_NE(text.find("FAIL events.pism.jsonl"), std::string::npos) << text;

  // A single scheduler gets no comparison table.
  const auto single = dir.path() / "single";
  ASSERT_EQ(cli({"experiment", "--config", cfg, "--out", single.string(), "--schedulers", "random"}), cli::kExitOk);
  EXPECT_FALSE(std::filesystem::exists(single / "comparison.csv"));

  EXPECT_EQ(cli({"experiment", "--trace", (dir.path() / "missing").string(), "--out", single.string()}),
            cli::kExitRuntime);
  TempDir empty;
  EXPECT_EQ(cli({"validate", empty.path().string()}), cli::kExitRuntime);
}

}  // namespace
}  // namespace pism
