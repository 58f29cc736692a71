#include "pism/trace_io.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "json.hpp"
#include "pism/error.hpp"

namespace pism {

namespace fs = std::filesystem;

namespace {

std::string_view extension(TraceFormat f) { return f == TraceFormat::Csv ? "csv" : "jsonl"; }

fs::path file_in(const fs::path& dir, std::string_view stem, TraceFormat f) {
  return dir / (std::string(stem) + "." + std::string(extension(f)));
}

std::string format_number(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  std::size_t at = 0;
  while (true) {
    const auto next = s.find(sep, at);
    out.push_back(s.substr(at, next == std::string_view::npos ? std::string_view::npos : next - at));
    if (next == std::string_view::npos) break;
    at = next + 1;
  }
  return out;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

void check_id(std::string_view id, std::string_view what) {
  if (id.empty()) throw ValidationError(std::string(what) + " id is empty");
  if (id.find_first_of(",\"\n:;|>") != std::string_view::npos) {
    throw ValidationError(std::string(what) + " id '" + std::string(id) + "' contains a reserved character");
  }
}

// Reads one record per non-empty, non-comment line.
template <typename Fn>
void for_each_line(const fs::path& path, Fn&& fn) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    fn(t, number);
  }
}

class Record {
 public:
  Record(std::string_view line, std::size_t number, const fs::path& path, TraceFormat format)
      : number_(number), file_(path.filename().string()), format_(format) {
    if (format == TraceFormat::Csv) {
      for (auto f : split(line, ',')) fields_.push_back(trim(f));
    } else {
      try {
        json_ = nlohmann::json::parse(line);
      } catch (const nlohmann::json::exception& e) {
        fail(e.what());
      }
      if (!json_.is_object()) fail("expected a JSON object");
    }
  }

  [[noreturn]] void fail(const std::string& what) const { throw ParseError(file_, number_, what); }

  std::size_t size() const { return fields_.size(); }

  std::string text(std::size_t column, const char* key) const {
    if (format_ == TraceFormat::Csv) {
      if (column >= fields_.size()) fail(std::string("missing field '") + key + "'");
      return std::string(fields_[column]);
    }
    auto it = json_.find(key);
    if (it == json_.end()) fail(std::string("missing field '") + key + "'");
    if (it->is_string()) return it->get<std::string>();
    if (it->is_number()) return it->dump();
    fail(std::string("field '") + key + "' has the wrong type");
  }

  double number(std::size_t column, const char* key) const {
    if (format_ == TraceFormat::Jsonl) {
      auto it = json_.find(key);
      if (it != json_.end() && it->is_number()) return it->get<double>();
    }
    const auto s = text(column, key);
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size()) {
      fail(std::string("field '") + key + "' is not a number: '" + s + "'");
    }
    return v;
  }

  long long integer(std::size_t column, const char* key) const {
    const double v = number(column, key);
    if (v != static_cast<double>(static_cast<long long>(v))) fail(std::string("field '") + key + "' is not an integer");
    return static_cast<long long>(v);
  }

 private:
  std::size_t number_;
  std::string file_;
  TraceFormat format_;
  std::vector<std::string_view> fields_;
  nlohmann::json json_;
};

class Writer {
 public:
  Writer(const fs::path& path, TraceFormat format) : out_(path), format_(format), path_(path) {
    if (!out_) throw Error("cannot write " + path.string());
  }

  void header(std::initializer_list<const char*> names) {
    if (format_ != TraceFormat::Csv) return;
    bool first = true;
    for (auto n : names) {
      out_ << (first ? "" : ",") << n;
      first = false;
    }
    out_ << '\n';
  }

  void comment(const std::string& text) {
    if (format_ == TraceFormat::Csv) out_ << "# " << text << '\n';
  }

  // Values are (key, text, is_number).
  void row(std::initializer_list<std::tuple<const char*, std::string, bool>> values) {
    if (format_ == TraceFormat::Csv) {
      bool first = true;
      for (const auto& [k, v, num] : values) {
        out_ << (first ? "" : ",") << v;
        first = false;
      }
      out_ << '\n';
    } else {
      nlohmann::ordered_json j;
      for (const auto& [k, v, num] : values) {
        if (num) {
          j[k] = nlohmann::ordered_json::parse(v);
        } else {
          j[k] = v;
        }
      }
      out_ << j.dump() << '\n';
    }
  }

  void close() {
    out_.close();
    if (!out_) throw Error("failed writing " + path_.string());
  }

 private:
  std::ofstream out_;
  TraceFormat format_;
  fs::path path_;
};

std::tuple<const char*, std::string, bool> str(const char* k, std::string v) { return {k, std::move(v), false}; }
std::tuple<const char*, std::string, bool> num(const char* k, double v) { return {k, format_number(v), true}; }

}  // namespace

std::optional<TraceFormat> parse_trace_format(std::string_view text) {
  if (text == "csv") return TraceFormat::Csv;
  if (text == "jsonl" || text == "json") return TraceFormat::Jsonl;
  return std::nullopt;
}

std::string encode_dag(const Dag& dag) {
  std::string out;
  for (std::size_t i = 0; i < dag.nodes().size(); ++i) {
    if (i > 0) out += ';';
    out += dag.nodes()[i].id;
    out += ':';
    out += to_string(dag.nodes()[i].label);
  }
  out += '|';
  for (std::size_t i = 0; i < dag.edges().size(); ++i) {
    if (i > 0) out += ';';
    out += dag.nodes()[dag.edges()[i].first].id;
    out += '>';
    out += dag.nodes()[dag.edges()[i].second].id;
  }
  return out;
}

Dag decode_dag(std::string_view text) {
  const auto bar = text.find('|');
  if (bar == std::string_view::npos) throw ValidationError("DAG string has no '|' separator");
  Dag dag;
  const auto nodes = text.substr(0, bar);
  const auto edges = text.substr(bar + 1);
  if (!nodes.empty()) {
    for (auto item : split(nodes, ';')) {
      const auto colon = item.find(':');
      if (colon == std::string_view::npos) throw ValidationError("DAG node '" + std::string(item) + "' has no label");
      const auto label = parse_op_label(item.substr(colon + 1));
      if (!label) throw ValidationError("unknown operation label '" + std::string(item.substr(colon + 1)) + "'");
      if (colon == 0) throw ValidationError("DAG node with empty id");
      dag.add_node(std::string(item.substr(0, colon)), *label);
    }
  }
  if (!edges.empty()) {
    for (auto item : split(edges, ';')) {
      const auto gt = item.find('>');
      if (gt == std::string_view::npos) throw ValidationError("DAG edge '" + std::string(item) + "' has no '>'");
      dag.add_edge(item.substr(0, gt), item.substr(gt + 1));
    }
  }
  return dag;
}

Trace load_trace(const fs::path& dir, TraceFormat format) {
  if (!fs::is_directory(dir)) throw Error("trace directory " + dir.string() + " does not exist");
  for (auto stem : {"jobs", "tasks", "topology"}) {
    if (!fs::exists(file_in(dir, stem, format))) throw Error("missing trace file " + file_in(dir, stem, format).string());
  }
  Trace trace;
  const bool csv = format == TraceFormat::Csv;

  // Topology.
  const auto topo = file_in(dir, "topology", format);
  for_each_line(topo, [&](std::string_view line, std::size_t n) {
    if (csv && line.rfind("record,", 0) == 0) return;
    Record r(line, n, topo, format);
    const auto kind = r.text(0, "record");
    if (kind == "server") {
      ServerSpec s;
      s.server_id = r.text(1, "server_id");
      s.cpu_capacity = r.number(2, "cpu_capacity");
      s.mem_capacity = r.number(3, "mem_capacity");
      trace.servers.push_back(std::move(s));
    } else if (kind == "lcs") {
      LcsInstance inst;
      inst.instance_id = r.text(1, "instance_id");
      inst.service_id = r.text(2, "service_id");
      inst.server_id = r.text(3, "server_id");
      inst.cpu_quota = r.number(4, "cpu_quota");
      inst.mem_quota = (!csv || r.size() > 5) ? r.number(5, "mem_quota") : 0.0;
      trace.lcs_instances.push_back(std::move(inst));
    } else if (kind == "horizon") {
      trace.horizon = r.number(1, "horizon");
    } else {
      r.fail("unknown topology record '" + kind + "'");
    }
  });

  // Jobs.
  std::unordered_map<std::string, std::size_t> job_index;
  const auto jobs = file_in(dir, "jobs", format);
  for_each_line(jobs, [&](std::string_view line, std::size_t n) {
    if (csv && line.rfind("job_id,", 0) == 0) return;
    Record r(line, n, jobs, format);
    BeJob job;
    job.job_id = r.text(0, "job_id");
    const auto type = r.text(1, "job_type");
    const auto parsed = parse_job_type(type);
    if (!parsed) r.fail("unknown job_type '" + type + "'");
    job.type = *parsed;
    job.submission_time = r.number(2, "submission_time");
    try {
      job.dag = decode_dag(r.text(3, "dag"));
    } catch (const ValidationError& e) {
      r.fail("job " + job.job_id + ": " + e.what());
    }
    if (!job_index.emplace(job.job_id, trace.jobs.size()).second) r.fail("duplicate job_id '" + job.job_id + "'");
    trace.jobs.push_back(std::move(job));
  });

  // Tasks.
  const auto tasks = file_in(dir, "tasks", format);
  for_each_line(tasks, [&](std::string_view line, std::size_t n) {
    if (csv && line.rfind("task_id,", 0) == 0) return;
    Record r(line, n, tasks, format);
    BeTask t;
    t.task_id = r.text(0, "task_id");
    t.job_id = r.text(1, "job_id");
    const auto label = r.text(2, "operation_label");
    const auto parsed = parse_op_label(label);
    if (!parsed) r.fail("unknown operation_label '" + label + "'");
    t.label = *parsed;
    t.instance_count = static_cast<int>(r.integer(3, "instance_count"));
    t.cpu = r.number(4, "cpu");
    t.mem = r.number(5, "mem");
    t.makespan = r.number(6, "makespan");
    auto it = job_index.find(t.job_id);
    if (it == job_index.end()) r.fail("task " + t.task_id + " references unknown job '" + t.job_id + "'");
    trace.jobs[it->second].tasks.push_back(std::move(t));
  });

  trace.finalize();
  return trace;
}

void save_trace(const Trace& trace, const fs::path& dir, TraceFormat format) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (!fs::is_directory(dir)) throw Error("cannot create trace directory " + dir.string());

  for (const auto& s : trace.servers) check_id(s.server_id, "server");
  for (const auto& i : trace.lcs_instances) {
    check_id(i.instance_id, "LCS instance");
    check_id(i.service_id, "service");
  }

  Writer topo(file_in(dir, "topology", format), format);
  topo.comment("server,server_id,cpu_capacity,mem_capacity");
  topo.comment("lcs,instance_id,service_id,server_id,cpu_quota,mem_quota");
  topo.comment("horizon,seconds");
  topo.row({str("record", "horizon"), num("horizon", trace.horizon)});
  for (const auto& s : trace.servers) {
    topo.row({str("record", "server"), str("server_id", s.server_id), num("cpu_capacity", s.cpu_capacity),
              num("mem_capacity", s.mem_capacity)});
  }
  for (const auto& i : trace.lcs_instances) {
    topo.row({str("record", "lcs"), str("instance_id", i.instance_id), str("service_id", i.service_id),
              str("server_id", i.server_id), num("cpu_quota", i.cpu_quota), num("mem_quota", i.mem_quota)});
  }
  topo.close();

  Writer jobs(file_in(dir, "jobs", format), format);
  jobs.header({"job_id", "job_type", "submission_time", "dag"});
  Writer tasks(file_in(dir, "tasks", format), format);
  tasks.header({"task_id", "job_id", "operation_label", "instance_count", "cpu", "mem", "makespan"});
  for (const auto& j : trace.jobs) {
    check_id(j.job_id, "job");
    for (const auto& n : j.dag.nodes()) check_id(n.id, "DAG node");
    jobs.row({str("job_id", j.job_id), str("job_type", std::string(to_string(j.type))),
              num("submission_time", j.submission_time), str("dag", encode_dag(j.dag))});
    for (const auto& t : j.tasks) {
      tasks.row({str("task_id", t.task_id), str("job_id", j.job_id),
                 str("operation_label", std::string(to_string(t.label))),
                 num("instance_count", t.instance_count), num("cpu", t.cpu), num("mem", t.mem),
                 num("makespan", t.makespan)});
    }
  }
  jobs.close();
  tasks.close();
}

}  // namespace pism
