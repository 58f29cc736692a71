#include "pism/types.hpp"

#include <algorithm>
#include <map>
#include <queue>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include "pism/error.hpp"

namespace pism {

std::string_view to_string(OpLabel label) {
  switch (label) {
    case OpLabel::Map: return "Map";
    case OpLabel::Join: return "Join";
    case OpLabel::Reduce: return "Reduce";
    case OpLabel::Other: return "Other";
  }
  return "Other";
}

std::string_view to_string(JobType type) {
  switch (type) {
    case JobType::SQL: return "SQL";
    case JobType::SQLRT: return "SQLRT";
    case JobType::Algo: return "Algo";
    case JobType::Dup: return "Dup";
  }
  return "SQL";
}

std::optional<OpLabel> parse_op_label(std::string_view text) {
  for (OpLabel l : {OpLabel::Map, OpLabel::Join, OpLabel::Reduce, OpLabel::Other}) {
    if (to_string(l) == text) return l;
  }
  return std::nullopt;
}

std::optional<JobType> parse_job_type(std::string_view text) {
  for (JobType t : {JobType::SQL, JobType::SQLRT, JobType::Algo, JobType::Dup}) {
    if (to_string(t) == text) return t;
  }
  return std::nullopt;
}

std::size_t Dag::add_node(std::string id, OpLabel label) {
  nodes_.push_back({std::move(id), label});
  return nodes_.size() - 1;
}

std::optional<std::size_t> Dag::find(std::string_view id) const {
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (nodes_[i].id == id) return i;
  }
  return std::nullopt;
}

void Dag::add_edge(std::string_view from_id, std::string_view to_id) {
  auto from = find(from_id);
  auto to = find(to_id);
  if (!from) throw ValidationError("edge references missing node '" + std::string(from_id) + "'");
  if (!to) throw ValidationError("edge references missing node '" + std::string(to_id) + "'");
  edges_.emplace_back(*from, *to);
}

void Dag::add_edge_index(std::size_t from, std::size_t to) {
  if (from >= nodes_.size() || to >= nodes_.size()) {
    throw ValidationError("edge index out of range");
  }
  edges_.emplace_back(from, to);
}

std::vector<std::vector<std::size_t>> Dag::in_neighbors() const {
  std::vector<std::vector<std::size_t>> in(nodes_.size());
  for (auto [from, to] : edges_) in[to].push_back(from);
  for (auto& v : in) std::sort(v.begin(), v.end());
  return in;
}

std::vector<std::vector<std::size_t>> Dag::out_neighbors() const {
  std::vector<std::vector<std::size_t>> out(nodes_.size());
  for (auto [from, to] : edges_) out[from].push_back(to);
  for (auto& v : out) std::sort(v.begin(), v.end());
  return out;
}

std::vector<std::size_t> Dag::topological_order() const {
  std::vector<std::size_t> indegree(nodes_.size(), 0);
  for (auto e : edges_) ++indegree[e.second];
  const auto out = out_neighbors();
  auto later = [this](std::size_t a, std::size_t b) { return nodes_[a].id > nodes_[b].id; };
  std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(later)> ready(later);
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (indegree[i] == 0) ready.push(i);
  }
  std::vector<std::size_t> order;
  order.reserve(nodes_.size());
  while (!ready.empty()) {
    const std::size_t n = ready.top();
    ready.pop();
    order.push_back(n);
    for (std::size_t m : out[n]) {
      if (--indegree[m] == 0) ready.push(m);
    }
  }
  if (order.size() != nodes_.size()) throw ValidationError("DAG contains a cycle");
  return order;
}

void Dag::validate(std::string_view owner) const {
  std::unordered_set<std::string> seen;
  for (const auto& n : nodes_) {
    if (!seen.insert(n.id).second) {
      throw ValidationError("job " + std::string(owner) + ": duplicate node id '" + n.id + "'");
    }
  }
  for (auto [from, to] : edges_) {
    if (from >= nodes_.size() || to >= nodes_.size()) {
      throw ValidationError("job " + std::string(owner) + ": edge references missing node");
    }
  }
  try {
    (void)topological_order();
  } catch (const ValidationError&) {
    throw ValidationError("job " + std::string(owner) + ": DAG contains a cycle");
  }
}

namespace {

void validate_job(BeJob& job, std::unordered_set<std::string>& task_ids) {
  if (job.submission_time < 0.0) {
    throw ValidationError("job " + job.job_id + ": negative submission_time");
  }
  job.dag.validate(job.job_id);
  if (job.tasks.size() != job.dag.size()) {
    throw ValidationError("job " + job.job_id + ": task count does not match DAG node count");
  }
  // Put tasks in DAG node order.
  std::vector<BeTask> ordered;
  ordered.reserve(job.tasks.size());
  for (const auto& node : job.dag.nodes()) {
    auto it = std::find_if(job.tasks.begin(), job.tasks.end(),
                           [&](const BeTask& t) { return t.task_id == node.id; });
    if (it == job.tasks.end()) {
      throw ValidationError("job " + job.job_id + ": no task for DAG node '" + node.id + "'");
    }
    ordered.push_back(*it);
  }
  job.tasks = std::move(ordered);
  for (auto& t : job.tasks) {
    if (t.job_id.empty()) t.job_id = job.job_id;
    if (t.job_id != job.job_id) {
      throw ValidationError("task " + t.task_id + ": job_id mismatch");
    }
    if (!task_ids.insert(t.task_id).second) {
      throw ValidationError("duplicate task_id '" + t.task_id + "'");
    }
    if (t.instance_count < 1) throw ValidationError("task " + t.task_id + ": instance_count < 1");
    if (!(t.cpu > 0.0) || !(t.mem > 0.0) || !(t.makespan > 0.0)) {
      throw ValidationError("task " + t.task_id + ": cpu, mem and makespan must be positive");
    }
  }
}

}  // namespace

void Trace::finalize() {
  std::sort(servers.begin(), servers.end(),
            [](const ServerSpec& a, const ServerSpec& b) { return a.server_id < b.server_id; });
  std::unordered_map<std::string, std::size_t> server_index;
  for (std::size_t i = 0; i < servers.size(); ++i) {
    auto& s = servers[i];
    if (!server_index.emplace(s.server_id, i).second) {
      throw ValidationError("duplicate server_id '" + s.server_id + "'");
    }
    if (!(s.cpu_capacity > 0.0) || !(s.mem_capacity > 0.0)) {
      throw ValidationError("server " + s.server_id + ": capacities must be positive");
    }
    s.lcs_instances.clear();
  }

  std::sort(lcs_instances.begin(), lcs_instances.end(),
            [](const LcsInstance& a, const LcsInstance& b) { return a.instance_id < b.instance_id; });
  std::set<std::string> service_ids;
  for (std::size_t i = 0; i < lcs_instances.size(); ++i) {
    auto& inst = lcs_instances[i];
    if (i > 0 && lcs_instances[i - 1].instance_id == inst.instance_id) {
      throw ValidationError("duplicate instance_id '" + inst.instance_id + "'");
    }
    auto it = server_index.find(inst.server_id);
    if (it == server_index.end()) {
      throw ValidationError("LCS instance " + inst.instance_id + ": unknown server '" + inst.server_id + "'");
    }
    if (inst.cpu_quota < 1.0 || inst.cpu_quota > 32.0) {
      throw ValidationError("LCS instance " + inst.instance_id + ": cpu_quota outside [1, 32]");
    }
    if (inst.mem_quota < 0.0) {
      throw ValidationError("LCS instance " + inst.instance_id + ": negative mem_quota");
    }
    for (std::size_t j = 0; j < inst.rt_series.size(); ++j) {
      if (!(inst.rt_series[j].rt > 0.0)) {
        throw ValidationError("LCS instance " + inst.instance_id + ": non-positive RT sample");
      }
      if (j > 0 && inst.rt_series[j].timestamp <= inst.rt_series[j - 1].timestamp) {
        throw ValidationError("LCS instance " + inst.instance_id + ": RT timestamps not increasing");
      }
    }
    inst.server_index = it->second;
    servers[it->second].lcs_instances.push_back(i);
    service_ids.insert(inst.service_id);
  }

  services.clear();
  std::unordered_map<std::string, std::size_t> service_index;
  for (const auto& id : service_ids) {
    service_index.emplace(id, services.size());
    services.push_back({id, {}, 0.0});
  }
  for (std::size_t i = 0; i < lcs_instances.size(); ++i) {
    auto& inst = lcs_instances[i];
    inst.service_index = service_index.at(inst.service_id);
    auto& svc = services[inst.service_index];
    svc.instances.push_back(i);
    svc.cpu_quota_per_instance = std::max(svc.cpu_quota_per_instance, inst.cpu_quota);
  }

  for (const auto& s : servers) {
    double cpu = 0.0, mem = 0.0;
    for (std::size_t i : s.lcs_instances) {
      cpu += lcs_instances[i].cpu_quota;
      mem += lcs_instances[i].mem_quota;
    }
    if (cpu > s.cpu_capacity + 1e-9 || mem > s.mem_capacity + 1e-9) {
      throw ValidationError("server " + s.server_id + ": LCS reservations exceed capacity");
    }
  }

  std::unordered_set<std::string> job_ids;
  std::unordered_set<std::string> task_ids;
  for (auto& job : jobs) {
    if (!job_ids.insert(job.job_id).second) {
      throw ValidationError("duplicate job_id '" + job.job_id + "'");
    }
    validate_job(job, task_ids);
  }
  std::stable_sort(jobs.begin(), jobs.end(), [](const BeJob& a, const BeJob& b) {
    if (a.submission_time != b.submission_time) return a.submission_time < b.submission_time;
    return a.job_id < b.job_id;
  });

  if (horizon <= 0.0) {
    for (const auto& j : jobs) horizon = std::max(horizon, j.submission_time);
  }
  for (const auto& u : utilization) {
    if (u.server >= servers.size()) throw ValidationError("utilization sample for unknown server");
  }
}

std::optional<std::size_t> Trace::find_server(std::string_view id) const {
  auto it = std::lower_bound(servers.begin(), servers.end(), id,
                             [](const ServerSpec& s, std::string_view v) { return s.server_id < v; });
  if (it == servers.end() || it->server_id != id) return std::nullopt;
  return static_cast<std::size_t>(it - servers.begin());
}

std::optional<std::size_t> Trace::find_service(std::string_view id) const {
  for (std::size_t i = 0; i < services.size(); ++i) {
    if (services[i].service_id == id) return i;
  }
  return std::nullopt;
}

std::size_t Trace::total_instances() const {
  std::size_t n = 0;
  for (const auto& j : jobs) {
    for (const auto& t : j.tasks) n += static_cast<std::size_t>(t.instance_count);
  }
  return n;
}

}  // namespace pism
