#include "cli.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "pism/analysis.hpp"
#include "pism/config.hpp"
#include "pism/error.hpp"
#include "pism/generator.hpp"
#include "pism/oracle.hpp"
#include "pism/pipeline.hpp"
#include "pism/trace_io.hpp"

namespace pism::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

struct Common {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::string format = "csv";
  std::optional<int> k;
  std::string schedulers;
};

void add_common(CLI::App* cmd, Common& c, bool with_out = true) {
  cmd->add_option("--config", c.config, "key = value config file")->check(CLI::ExistingFile);
  cmd->add_option("--seed", c.seed, "master seed (overrides the config)");
  if (with_out) cmd->add_option("--out", c.out, "output directory");
  cmd->add_option("--format", c.format, "output format")->check(CLI::IsMember({"csv", "json", "jsonl"}));
  cmd->add_option("--k", c.k, "interference levels (overrides the config)");
  cmd->add_option("--schedulers", c.schedulers, "comma-separated scheduler kinds (overrides the config)");
}

RunConfig resolve_config(const Common& c) {
  KeyValueConfig kv;
  if (!c.config.empty()) {
    try {
      kv = KeyValueConfig::load(c.config);
    } catch (const ParseError& e) {
      throw ConfigError(e.what());
    }
  }
  if (c.seed) kv.set("seed", std::to_string(*c.seed));
  if (c.k) kv.set("scoring.k", std::to_string(*c.k));
  if (!c.schedulers.empty()) kv.set("scheduler.list", c.schedulers);
  RunConfig rc = RunConfig::from(kv);
  rc.validate();
  return rc;
}

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) throw Error("cannot create output directory " + dir.string());
}

void write_file(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  out << text;
  out.close();
  if (!out) throw Error("failed writing " + path.string());
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ParseError(path.filename().string(), 1, e.what());
  }
}

std::string file_tag(SchedulerKind kind) {
  std::string s(to_string(kind));
  for (auto& ch : s) {
    if (ch == '+') ch = '-';
  }
  return s;
}

TraceFormat detect_format(const fs::path& dir) {
  if (fs::exists(dir / "jobs.csv")) return TraceFormat::Csv;
  if (fs::exists(dir / "jobs.jsonl")) return TraceFormat::Jsonl;
  throw Error("no trace found in " + dir.string() + " (expected jobs.csv or jobs.jsonl)");
}

json manifest(const RunConfig& rc, std::string kind) {
  return {{"kind", std::move(kind)}, {"config_hash", rc.hash()}, {"seed", rc.seed}};
}

// Fills Trace::utilization and every LCS rt_series from a Random replay.
void observe(Trace& trace, const RunConfig& rc) {
  const auto oracle = make_oracle_params(trace, rc.gen.thresholds, rc.oracle, rc.seed);
  SimConfig sc = rc.pipeline_config().sim;
  Recording rec;
  spdlog::info("replaying {} jobs under random placement to collect observations", trace.jobs.size());
  (void)run(trace, SchedulerKind::Random, oracle, sc, nullptr, nullptr, &rec);
  trace.utilization.clear();
  for (auto& inst : trace.lcs_instances) inst.rt_series.clear();
  for (std::size_t t = 0; t < rec.tick_times.size(); ++t) {
    for (std::size_t s = 0; s < rec.servers; ++s) {
      double lcs = 0.0;
      for (auto i : trace.servers[s].lcs_instances) {
        lcs += trace.lcs_instances[i].cpu_quota *
               oracle.services[trace.lcs_instances[i].service_index].cpu_usage_fraction;
      }
      trace.utilization.push_back({rec.tick_times[t], s, rec.be_cpu[t * rec.servers + s], lcs});
    }
    for (std::size_t i = 0; i < rec.lcs_instances; ++i) {
      trace.lcs_instances[i].rt_series.push_back({rec.tick_times[t], rec.rt[t * rec.lcs_instances + i]});
    }
  }
}

std::string cdf_csv(const Cdf& cdf, const std::string& prefix_header, const std::string& prefix) {
  std::ostringstream os;
  if (!prefix_header.empty()) os << prefix_header << ',';
  os << "value,cumulative_fraction\n";
  for (const auto& [v, f] : cdf) {
    if (!prefix.empty()) os << prefix << ',';
    os << v << ',' << f << '\n';
  }
  return os.str();
}

json cdf_json(const Cdf& cdf) {
  json a = json::array();
  for (const auto& [v, f] : cdf) a.push_back({v, f});
  return a;
}

void emit(const std::string& out, const std::string& name, const std::string& text) {
  if (out.empty()) {
    std::cout << text;
  } else {
    ensure_dir(out);
    write_file(fs::path(out) / name, text);
  }
}

// generate

int cmd_generate(const Common& c) {
  if (c.out.empty()) throw ConfigError("generate needs --out");
  const RunConfig rc = resolve_config(c);
  const auto format = parse_trace_format(c.format);
  if (!format) throw ConfigError("unknown trace format '" + c.format + "'");
  spdlog::info("generating trace: {} servers, {} services, {} templates, seed {}", rc.gen.servers,
               rc.gen.services, rc.gen.templates, rc.seed);
  const Trace trace = generate_synthetic_trace(rc.gen, rc.seed);
  const fs::path out(c.out);
  if (fs::exists(out) && !fs::is_directory(out)) throw Error(c.out + " exists and is not a directory");
  save_trace(trace, out, *format);
  auto m = manifest(rc, "trace");
  m["format"] = *format == TraceFormat::Csv ? "csv" : "jsonl";
  m["jobs"] = trace.jobs.size();
  m["servers"] = trace.servers.size();
  m["lcs_instances"] = trace.lcs_instances.size();
  write_file(out / "manifest.json", m.dump(2) + "\n");
  write_file(out / "config.txt", rc.canonical_text());
  std::cout << "wrote " << trace.jobs.size() << " jobs, " << trace.total_instances() << " instances to " << c.out
            << "\n";
  return kExitOk;
}

// analyze

int cmd_analyze(const Common& c, const std::string& trace_dir, const std::string& which, const std::string& entity,
                const std::string& service) {
  const RunConfig rc = resolve_config(c);
  Trace trace = load_trace(trace_dir, detect_format(trace_dir));
  const bool as_json = c.format != "csv";
  if (which == "repeatability") {
    const auto t = analyze_repeatability(trace, rc.wl_iterations);
    if (as_json) {
      emit(c.out, "repeatability.json",
           json{{"dag_groups", t.dag_groups},
                {"jobs", t.jobs},
                {"infrequent_groups", t.infrequent_groups},
                {"infrequent_jobs", t.infrequent_jobs},
                {"unique_groups", t.unique_groups},
                {"config_hash", rc.hash()},
                {"seed", rc.seed}}
                   .dump(2) +
               "\n");
    } else {
      std::ostringstream os;
      os << "dag_groups,jobs,infrequent_groups,infrequent_jobs,unique_groups\n"
         << t.dag_groups << ',' << t.jobs << ',' << t.infrequent_groups << ',' << t.infrequent_jobs << ','
         << t.unique_groups << '\n';
      emit(c.out, "repeatability.csv", os.str());
    }
    return kExitOk;
  }
  if (trace.utilization.empty()) observe(trace, rc);
  if (which == "utilization") {
    const auto e = parse_util_entity(entity);
    if (!e) throw ConfigError("unknown entity '" + entity + "' (server, lcs or bej)");
    const auto cdf = analyze_utilization_cdf(trace, *e);
    if (as_json) {
      emit(c.out, "utilization_" + entity + ".json",
           json{{"entity", entity}, {"cdf", cdf_json(cdf)}, {"config_hash", rc.hash()}, {"seed", rc.seed}}.dump(2) +
               "\n");
    } else {
      emit(c.out, "utilization_" + entity + ".csv", cdf_csv(cdf, "entity", entity));
    }
    return kExitOk;
  }
  if (which == "cv") {
    std::vector<std::string> ids;
    if (!service.empty()) {
      ids.push_back(service);
    } else {
      for (const auto& s : trace.services) ids.push_back(s.service_id);
    }
    json j = json::object();
    std::string csv = "service_id,value,cumulative_fraction\n";
    for (const auto& id : ids) {
      const auto r = analyze_cv(trace, id);
      if (r.excluded > 0) spdlog::warn("service {}: {} instances with fewer than two RT samples excluded", id, r.excluded);
      j[id] = {{"cdf", cdf_json(r.cdf)}, {"excluded", r.excluded}};
      for (const auto& [v, f] : r.cdf) csv += id + "," + std::to_string(v) + "," + std::to_string(f) + "\n";
    }
    if (as_json) {
      emit(c.out, "cv.json", json{{"services", j}, {"config_hash", rc.hash()}, {"seed", rc.seed}}.dump(2) + "\n");
    } else {
      emit(c.out, "cv.csv", csv);
    }
    return kExitOk;
  }
  throw ConfigError("unknown analysis '" + which + "' (utilization, cv or repeatability)");
}

// experiment

json scoring_models_json(const Trace& trace, const TrainedModels& m, const RunConfig& rc) {
  json services = json::array();
  for (std::size_t s = 0; s < trace.services.size(); ++s) {
    json e = {{"service_id", trace.services[s].service_id}};
    e["table"] = m.tables[s] ? m.tables[s]->to_json() : json(nullptr);
    e["model"] = m.scorers.has(s) ? m.scorers.by_service[s]->to_json() : json(nullptr);
    e["cold_start"] = !m.scorers.has(s);
    services.push_back(std::move(e));
  }
  json weights = json::array();
  for (std::size_t i = 0; i < trace.lcs_instances.size(); ++i) {
    const auto& w = m.raw_weights[i];
    weights.push_back({{"instance_id", trace.lcs_instances[i].instance_id},
                       {"fair", w[0]},
                       {"cpu_quota", w[1]},
                       {"corr", w[2]},
                       {"cv", w[3]}});
  }
  return {{"version", ScoringModel::kFormatVersion},
          {"k", m.scorers.k},
          {"scheme", to_string(rc.scheme)},
          {"config_hash", rc.hash()},
          {"seed", rc.seed},
          {"services", services},
          {"raw_weights", weights}};
}

struct Comparison {
  std::string scheduler;
  std::string baseline;
  double score = 0.0;
  double baseline_score = 0.0;
  double score_delta = 0.0;  // relative change of the mean score
  double top_share = 0.0;
  double baseline_top_share = 0.0;
  double lowest_share = 0.0;
  double baseline_lowest_share = 0.0;
  double tail_heavy_improvement = 0.0;  // mean throughput-proxy change
  double tail_light_improvement = 0.0;
};

double share(const SimReport& r, std::size_t bucket) {
  return r.server_observations > 0
             ? static_cast<double>(r.score_histogram[bucket]) / static_cast<double>(r.server_observations)
             : 0.0;
}

// Tail classes always come from `classes`, the random-placement report.
Comparison compare(const SimReport& base, const SimReport& other, const SimReport& classes) {
  Comparison c;
  c.scheduler = other.scheduler;
  c.baseline = base.scheduler;
  c.score = other.mean_server_score;
  c.baseline_score = base.mean_server_score;
  c.score_delta = base.mean_server_score > 0.0 ? (other.mean_server_score - base.mean_server_score) / base.mean_server_score : 0.0;
  const auto top = base.score_histogram.size() - 1;
  c.top_share = share(other, top);
  c.baseline_top_share = share(base, top);
  c.lowest_share = share(other, 0);
  c.baseline_lowest_share = share(base, 0);
  double heavy = 0.0, light = 0.0;
  std::size_t nh = 0, nl = 0;
  for (const auto& s : classes.services) {
    const auto it = std::find_if(base.services.begin(), base.services.end(),
                                 [&](const ServiceReport& b) { return b.service_id == s.service_id; });
    if (it == base.services.end() || !(it->throughput_proxy > 0.0)) continue;
    const double imp = throughput_improvement(base, other, s.service_id);
    if (s.tail_heavy) {
      heavy += imp;
      ++nh;
    } else {
      light += imp;
      ++nl;
    }
  }
  c.tail_heavy_improvement = nh ? heavy / static_cast<double>(nh) : 0.0;
  c.tail_light_improvement = nl ? light / static_cast<double>(nl) : 0.0;
  return c;
}

// Comparisons are made against random placement, or the first scheduler when random is not listed.
std::size_t base_index(const RunConfig& rc) {
  for (std::size_t i = 0; i < rc.schedulers.size(); ++i) {
    if (rc.schedulers[i] == SchedulerKind::Random) return i;
  }
  return 0;
}

int cmd_experiment(const Common& c, const std::string& trace_dir, bool emit_logs) {
  if (c.out.empty()) throw ConfigError("experiment needs --out");
  const RunConfig rc = resolve_config(c);
  Trace trace;
  if (!trace_dir.empty()) {
    if (!fs::is_directory(trace_dir)) throw Error("trace directory " + trace_dir + " does not exist");
    trace = load_trace(trace_dir, detect_format(trace_dir));
  } else {
    spdlog::info("no --trace given; generating one from the config");
    trace = generate_synthetic_trace(rc.gen, rc.seed);
  }
  const fs::path out(c.out);
  ensure_dir(out);
  ensure_dir(out / "models");

  const auto oracle = make_oracle_params(trace, rc.gen.thresholds, rc.oracle, rc.seed);
  PipelineConfig pc = rc.pipeline_config();
  if (emit_logs) {
    pc.sim.decision_log = (out / "decisions").string();
    pc.sim.event_log = (out / "events").string();
  }
  spdlog::info("running pipeline: {} jobs, schedulers {}", trace.jobs.size(), rc.to_json()["scheduler.list"].get<std::string>());
  const auto result = run_pipeline(trace, oracle, pc);

  write_file(out / "config.txt", rc.canonical_text());
  {
    std::ostringstream groups;
    result.models.groups.write_jsonl(groups);
    write_file(out / "models" / "groups.jsonl", groups.str());
  }
  auto classifier = result.models.classifier.to_json();
  classifier["config_hash"] = rc.hash();
  classifier["seed"] = rc.seed;
  write_file(out / "models" / "classifier.json", classifier.dump() + "\n");
  write_file(out / "models" / "scoring.json", scoring_models_json(trace, result.models, rc).dump() + "\n");

  json files = json::array();
  for (std::size_t i = 0; i < result.reports.size(); ++i) {
    const auto& r = result.reports[i];
    const auto tag = file_tag(rc.schedulers[i]);
    write_file(out / ("report_" + tag + ".json"), r.to_json().dump(2) + "\n");
    files.push_back("report_" + tag + ".json");
    if (c.format == "csv") {
      write_file(out / ("histogram_" + tag + ".csv"), r.histogram_csv());
      write_file(out / ("percentiles_" + tag + ".csv"), r.percentiles_csv());
    }
  }

  // Metrics tables.
  std::ostringstream cls;
  cls << "train_tasks," << ClassifierMetrics::csv_header() << '\n'
      << result.classifier_train_tasks << ',' << result.classifier_metrics.csv_row() << '\n';
  std::ostringstream scoring;
  scoring << "predictor,service_id," << PredictionMetrics::csv_header() << '\n';
  scoring << "composition,all," << result.scoring.csv_row() << '\n';
  scoring << "utilization,all," << result.utilization_baseline.csv_row() << '\n';
  for (std::size_t s = 0; s < trace.services.size(); ++s) {
    if (result.scoring_by_service[s].samples == 0) continue;
    scoring << "composition," << trace.services[s].service_id << ',' << result.scoring_by_service[s].csv_row() << '\n';
    scoring << "utilization," << trace.services[s].service_id << ',' << result.utilization_by_service[s].csv_row()
            << '\n';
  }

  std::vector<Comparison> comparisons;
  if (result.reports.size() >= 2) {
    const std::size_t base = base_index(rc);
    for (std::size_t i = 0; i < result.reports.size(); ++i) {
      if (i == base) continue;
      comparisons.push_back(compare(result.reports[base], result.reports[i], result.reports[base]));
      // Wrapped schedulers are also compared with their own base.
      const auto kind = rc.schedulers[i];
      const auto own = kind == SchedulerKind::SpreadPism ? SchedulerKind::Spread
                       : kind == SchedulerKind::StackPism ? SchedulerKind::Stack
                                                          : kind;
      if (own != kind) {
        for (std::size_t j = 0; j < rc.schedulers.size(); ++j) {
          if (rc.schedulers[j] == own && j != base) comparisons.push_back(compare(result.reports[j], result.reports[i], result.reports[base]));
        }
      }
    }
  }
  std::ostringstream tails;
  if (result.reports.size() >= 2) {
    const auto& classes = result.reports[base_index(rc)];
    tails << "service_id,tail_class";
    for (const auto& r : result.reports) tails << ',' << r.scheduler << "_mean_rt," << r.scheduler << "_p90_rt";
    for (const auto& r : result.reports) {
      if (&r != &classes) tails << ',' << r.scheduler << "_throughput_improvement";
    }
    tails << '\n';
    for (const auto& s : classes.services) {
      tails << s.service_id << ',' << (s.tail_heavy ? "tail-heavy" : "tail-light");
      for (const auto& r : result.reports) {
        const auto it = std::find_if(r.services.begin(), r.services.end(),
                                     [&](const ServiceReport& x) { return x.service_id == s.service_id; });
        tails << ',' << it->mean_rt << ',' << it->percentiles[3];
      }
      for (const auto& r : result.reports) {
        if (&r != &classes) tails << ',' << throughput_improvement(classes, r, s.service_id);
      }
      tails << '\n';
    }
  }
  std::ostringstream cmp;
  cmp << "scheduler,baseline,mean_score,baseline_mean_score,score_delta,top_bucket_share,baseline_top_bucket_share,"
         "lowest_bucket_share,baseline_lowest_bucket_share,tail_heavy_throughput_improvement,"
         "tail_light_throughput_improvement\n";
  for (const auto& x : comparisons) {
    cmp << x.scheduler << ',' << x.baseline << ',' << x.score << ',' << x.baseline_score << ',' << x.score_delta << ','
        << x.top_share << ',' << x.baseline_top_share << ',' << x.lowest_share << ',' << x.baseline_lowest_share << ','
        << x.tail_heavy_improvement << ',' << x.tail_light_improvement << '\n';
  }

  if (c.format == "csv") {
    write_file(out / "classifier_metrics.csv", cls.str());
    write_file(out / "scoring_metrics.csv", scoring.str());
    if (!comparisons.empty()) {
      write_file(out / "comparison.csv", cmp.str());
      write_file(out / "tails.csv", tails.str());
    }
  } else {
    json summary = {{"config_hash", rc.hash()}, {"seed", rc.seed}};
    const auto& m = result.classifier_metrics;
    summary["classifier"] = {{"train_tasks", result.classifier_train_tasks},
                             {"tasks", m.tasks},
                             {"per_dim_acc", m.per_dim_acc},
                             {"overall_acc", m.overall_acc},
                             {"instance_weighted_acc", m.instance_weighted_acc},
                             {"boundary_tolerant_acc", m.boundary_tolerant_acc}};
    auto pm = [](const PredictionMetrics& p) {
      return json{{"samples", p.samples},
                  {"acc_within_2", p.acc_within_2},
                  {"busy_f1", p.busy.f1},
                  {"idle_f1", p.idle.f1},
                  {"severe_high_as_low", p.severe_high_as_low_rate},
                  {"severe_low_as_high", p.severe_low_as_high_rate}};
    };
    summary["scoring"] = {{"composition", pm(result.scoring)}, {"utilization", pm(result.utilization_baseline)}};
    json cj = json::array();
    for (const auto& x : comparisons) {
      cj.push_back({{"scheduler", x.scheduler},
                    {"baseline", x.baseline},
                    {"score_delta", x.score_delta},
                    {"top_bucket_share", x.top_share},
                    {"baseline_top_bucket_share", x.baseline_top_share},
                    {"tail_heavy_throughput_improvement", x.tail_heavy_improvement},
                    {"tail_light_throughput_improvement", x.tail_light_improvement}});
    }
    if (!comparisons.empty()) summary["comparison"] = cj;
    write_file(out / "summary.json", summary.dump(2) + "\n");
  }

  auto m = manifest(rc, "experiment");
  m["reports"] = files;
  m["candidates"] = rc.candidates;
  m["cold_start_services"] = result.cold_start_services;
  m["logs"] = emit_logs;
  write_file(out / "manifest.json", m.dump(2) + "\n");

  std::cout << "scheduler        mean_score  top_bucket\n";
  for (const auto& r : result.reports) {
    std::printf("%-16s %10.4f  %10.4f\n", r.scheduler.c_str(), r.mean_server_score, share(r, r.score_histogram.size() - 1));
  }
  for (const auto& x : comparisons) {
    std::printf("%s vs %s: score %+.1f%%\n", x.scheduler.c_str(), x.baseline.c_str(), 100.0 * x.score_delta);
  }
  return kExitOk;
}

// validate

struct Audit {
  std::size_t checks = 0;
  std::vector<std::string> violations;

  void pass(const std::string& what) {
    ++checks;
    std::cout << "PASS " << what << "\n";
  }
  void fail(const std::string& what, const std::string& why) {
    ++checks;
    violations.push_back(what + ": " + why);
    std::cout << "FAIL " << what << ": " << why << "\n";
  }
};

void audit_report(const fs::path& path, const std::optional<json>& man, Audit& audit) {
  const auto name = path.filename().string();
  SimReport r;
  try {
    r = SimReport::from_json(read_json(path));
  } catch (const std::exception& e) {
    audit.fail(name, std::string("unreadable report: ") + e.what());
    return;
  }
  std::uint64_t sum = 0;
  for (auto h : r.score_histogram) sum += h;
  if (sum != r.server_observations) {
    audit.fail(name, "histogram sums to " + std::to_string(sum) + " but there are " +
                         std::to_string(r.server_observations) + " server observations");
  } else if (static_cast<int>(r.score_histogram.size()) != r.k) {
    audit.fail(name, "histogram has " + std::to_string(r.score_histogram.size()) + " buckets, expected k");
  } else if (r.counters.released != r.counters.completed + r.counters.running + r.counters.queued) {
    audit.fail(name, "conservation violated: released != completed + running + queued");
  } else if (r.counters.placed != r.counters.completed + r.counters.running) {
    audit.fail(name, "conservation violated: placed != completed + running");
  } else if (man && (man->value("config_hash", "") != r.config_hash || man->value("seed", std::uint64_t{0}) != r.seed)) {
    audit.fail(name, "config hash or seed differs from manifest.json");
  } else {
    audit.pass(name);
  }
}

void audit_events(const fs::path& path, Audit& audit) {
  const auto name = path.filename().string();
  std::ifstream in(path);
  std::string line;
  std::size_t n = 0;
  struct Srv {
    double cpu_cap, mem_cap, cpu, mem;
    std::array<std::int64_t, kCategories> comp;
  };
  std::vector<Srv> servers;
  std::int64_t running = 0;
  std::size_t ticks = 0;
  try {
    while (std::getline(in, line)) {
      ++n;
      const auto e = json::parse(line);
      const auto kind = e.at("kind").get<std::string>();
      auto where = [&] { return "line " + std::to_string(n); };
      if (kind == "header") {
        for (const auto& s : e.at("servers")) {
          Srv v{s.at("cpu_capacity").get<double>(), s.at("mem_capacity").get<double>(), s.at("lcs_cpu").get<double>(),
                s.at("lcs_mem").get<double>(), {}};
          servers.push_back(v);
        }
        continue;
      }
      if (servers.empty()) return audit.fail(name, "event before header at " + where());
      if (kind == "start" || kind == "end") {
        const auto s = e.at("server").get<std::size_t>();
        const auto c = e.at("category").get<int>();
        if (s >= servers.size() || c < 0 || c >= kCategories) return audit.fail(name, "bad server or category at " + where());
        auto& v = servers[s];
        const double sign = kind == "start" ? 1.0 : -1.0;
        v.cpu += sign * e.at("cpu").get<double>();
        v.mem += sign * e.at("mem").get<double>();
        v.comp[static_cast<std::size_t>(c)] += kind == "start" ? 1 : -1;
        running += kind == "start" ? 1 : -1;
        if (v.comp[static_cast<std::size_t>(c)] < 0) return audit.fail(name, "composition underflow at " + where());
        if (v.cpu > v.cpu_cap + 1e-6 || v.mem > v.mem_cap + 1e-6) {
          return audit.fail(name, "capacity exceeded on server " + std::to_string(s) + " at " + where());
        }
      } else if (kind == "tick") {
        ++ticks;
        const auto& comps = e.at("compositions");
        if (comps.size() != servers.size()) return audit.fail(name, "tick with wrong server count at " + where());
        for (std::size_t s = 0; s < servers.size(); ++s) {
          std::array<std::int64_t, kCategories> expect{};
          for (const auto& pair : comps[s]) expect[pair.at(0).get<std::size_t>()] = pair.at(1).get<std::int64_t>();
          if (expect != servers[s].comp) {
            return audit.fail(name, "replayed composition differs on server " + std::to_string(s) + " at " + where());
          }
        }
        const auto released = e.at("released").get<std::int64_t>();
        const auto completed = e.at("completed").get<std::int64_t>();
        const auto run_count = e.at("running").get<std::int64_t>();
        const auto queued = e.at("queued").get<std::int64_t>();
        if (run_count != running) return audit.fail(name, "running count differs from replay at " + where());
        if (released != completed + run_count + queued) return audit.fail(name, "conservation violated at " + where());
      } else {
        return audit.fail(name, "unknown event kind '" + kind + "' at " + where());
      }
    }
  } catch (const json::exception& e) {
    return audit.fail(name, "malformed line " + std::to_string(n) + ": " + e.what());
  }
  if (servers.empty()) return audit.fail(name, "no header record");
  audit.pass(name + " (" + std::to_string(ticks) + " ticks replayed)");
}

void audit_decisions(const fs::path& path, std::size_t candidates, Audit& audit) {
  const auto name = path.filename().string();
  const bool wrapped = name.find("spread+pism") != std::string::npos || name.find("stack+pism") != std::string::npos;
  std::ifstream in(path);
  std::string line;
  std::size_t n = 0;
  try {
    while (std::getline(in, line)) {
      ++n;
      const auto d = json::parse(line);
      const auto server = d.at("server").get<std::size_t>();
      const auto cands = d.at("candidate_set").get<std::vector<std::size_t>>();
      if (wrapped) {
        if (cands.empty() || cands.size() > candidates) {
          return audit.fail(name, "candidate set size " + std::to_string(cands.size()) + " at line " + std::to_string(n));
        }
        if (std::find(cands.begin(), cands.end(), server) == cands.end()) {
          return audit.fail(name, "chosen server outside the candidate set at line " + std::to_string(n));
        }
      }
    }
  } catch (const json::exception& e) {
    return audit.fail(name, "malformed line " + std::to_string(n) + ": " + e.what());
  }
  audit.pass(name + " (" + std::to_string(n) + " decisions)");
}

int cmd_validate(const std::string& dir_text) {
  const fs::path dir(dir_text);
  if (!fs::is_directory(dir)) throw Error("nothing to validate: " + dir_text + " is not a directory");
  Audit audit;
  std::optional<json> man;
  std::size_t candidates = kDefaultCandidates;
  if (fs::exists(dir / "manifest.json")) {
    try {
      man = read_json(dir / "manifest.json");
      candidates = man->value("candidates", kDefaultCandidates);
      audit.pass("manifest.json");
    } catch (const std::exception& e) {
      audit.fail("manifest.json", e.what());
    }
  }
  std::vector<fs::path> entries;
  for (const auto& e : fs::directory_iterator(dir)) entries.push_back(e.path());
  std::sort(entries.begin(), entries.end());
  for (const auto& p : entries) {
    const auto name = p.filename().string();
    if (name.rfind("report_", 0) == 0 && p.extension() == ".json") audit_report(p, man, audit);
    if (name.rfind("events.", 0) == 0 && p.extension() == ".jsonl") audit_events(p, audit);
    if (name.rfind("decisions.", 0) == 0 && p.extension() == ".jsonl") audit_decisions(p, candidates, audit);
  }
  if (fs::exists(dir / "jobs.csv") || fs::exists(dir / "jobs.jsonl")) {
    try {
      const auto t = load_trace(dir, detect_format(dir));
      audit.pass("trace (" + std::to_string(t.jobs.size()) + " jobs)");
    } catch (const std::exception& e) {
      audit.fail("trace", e.what());
    }
  }
  const auto models = dir / "models";
  if (fs::is_directory(models)) {
    try {
      (void)ClassifierEnsemble::from_json(read_json(models / "classifier.json"));
      const auto scoring = read_json(models / "scoring.json");
      for (const auto& s : scoring.at("services")) {
        if (!s.at("table").is_null()) (void)PercentileTable::from_json(s.at("table"));
        if (!s.at("model").is_null()) (void)ScoringModel::from_json(s.at("model"));
      }
      std::ifstream groups(models / "groups.jsonl");
      (void)GroupRegistry::read_jsonl(groups, kDefaultWlIterations);
      audit.pass("models");
    } catch (const std::exception& e) {
      audit.fail("models", e.what());
    }
  }
  if (audit.checks == 0) throw Error("nothing to validate in " + dir_text);
  std::cout << (audit.violations.empty() ? "PASS" : "FAIL") << " " << audit.checks - audit.violations.size() << "/"
            << audit.checks << " checks\n";
  return audit.violations.empty() ? kExitOk : kExitValidation;
}

void setup_logging() {
  auto logger = spdlog::stderr_color_mt("pism");
  spdlog::set_default_logger(logger);
  spdlog::set_pattern("[%l] %v");
  const char* env = std::getenv("PISM_LOG");
  spdlog::set_level(env ? spdlog::level::from_str(env) : spdlog::level::warn);
}

}  // namespace

int run(const std::vector<std::string>& args) {
  static const bool logging_ready = (setup_logging(), true);
  (void)logging_ready;

  CLI::App app{"Trace-driven co-location simulator and interference scoring"};
  app.require_subcommand(1);

  Common gen_opts, ana_opts, exp_opts;
  auto* gen = app.add_subcommand("generate", "write a synthetic trace");
  add_common(gen, gen_opts);

  auto* ana = app.add_subcommand("analyze", "utilization / CV / repeatability tables for a trace");
  add_common(ana, ana_opts);
  std::string ana_trace, which = "utilization", entity = "server", service;
  ana->add_option("--trace", ana_trace, "trace directory")->required();
  ana->add_option("--which", which, "utilization, cv or repeatability")
      ->check(CLI::IsMember({"utilization", "cv", "repeatability"}));
  ana->add_option("--entity", entity, "server, lcs or bej (utilization)")->check(CLI::IsMember({"server", "lcs", "bej"}));
  ana->add_option("--service", service, "service id (cv); all services when omitted");

  auto* exp = app.add_subcommand("experiment", "train on day one and compare schedulers on the rest");
  add_common(exp, exp_opts);
  std::string exp_trace;
  bool emit_logs = false;
  exp->add_option("--trace", exp_trace, "trace directory (generated from the config when omitted)");
  exp->add_flag("--emit-logs", emit_logs, "write decision and event logs (large)");

  auto* val = app.add_subcommand("validate", "re-verify an output directory");
  std::string val_dir;
  val->add_option("dir", val_dir, "trace, experiment or report directory")->required();

  auto* cfg = app.add_subcommand("config", "print every config key with its default");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*gen) return cmd_generate(gen_opts);
    if (*ana) return cmd_analyze(ana_opts, ana_trace, which, entity, service);
    if (*exp) return cmd_experiment(exp_opts, exp_trace, emit_logs);
    if (*val) return cmd_validate(val_dir);
    if (*cfg) {
      std::cout << default_config_text();
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    spdlog::error("{}", e.what());
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
  return kExitUsage;
}

}  // namespace pism::cli
