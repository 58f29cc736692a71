#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace pism {

enum class OpLabel { Map, Join, Reduce, Other };
enum class JobType { SQL, SQLRT, Algo, Dup };

std::string_view to_string(OpLabel label);
std::string_view to_string(JobType type);
std::optional<OpLabel> parse_op_label(std::string_view text);
std::optional<JobType> parse_job_type(std::string_view text);

struct DagNode {
  std::string id;
  OpLabel label = OpLabel::Other;
};

// Job DAG. Edges are stored as node indices; node ids are unique within a DAG.
class Dag {
 public:
  std::size_t add_node(std::string id, OpLabel label);
  // Throws ValidationError when either id is unknown.
  void add_edge(std::string_view from_id, std::string_view to_id);
  void add_edge_index(std::size_t from, std::size_t to);

  const std::vector<DagNode>& nodes() const { return nodes_; }
  const std::vector<std::pair<std::size_t, std::size_t>>& edges() const { return edges_; }
  std::size_t size() const { return nodes_.size(); }
  std::optional<std::size_t> find(std::string_view id) const;

  // Predecessor indices of each node, sorted.
  std::vector<std::vector<std::size_t>> in_neighbors() const;
  std::vector<std::vector<std::size_t>> out_neighbors() const;

  // Kahn order; among ready nodes the lowest node id (string order) goes first.
  // Throws ValidationError if the graph has a cycle.
  std::vector<std::size_t> topological_order() const;

  // Checks unique ids, edge endpoints and acyclicity. `owner` names the job in errors.
  void validate(std::string_view owner) const;

 private:
  std::vector<DagNode> nodes_;
  std::vector<std::pair<std::size_t, std::size_t>> edges_;
};

// Task-level metrics are the mean over the task's instances.
struct BeTask {
  std::string task_id;
  std::string job_id;
  OpLabel label = OpLabel::Other;
  int instance_count = 1;
  double cpu = 0.0;       // cores per instance
  double mem = 0.0;       // GB per instance
  double makespan = 0.0;  // seconds
};

// tasks[i] is the task for dag.nodes()[i]; the node id equals the task id.
struct BeJob {
  std::string job_id;
  JobType type = JobType::SQL;
  double submission_time = 0.0;
  Dag dag;
  std::vector<BeTask> tasks;
};

struct RtSample {
  double timestamp = 0.0;  // seconds
  double rt = 0.0;         // ms
};

struct LcsInstance {
  std::string instance_id;
  std::string service_id;
  std::string server_id;
  double cpu_quota = 1.0;
  double mem_quota = 0.0;
  std::vector<RtSample> rt_series;  // filled by observation replays only
  std::size_t service_index = 0;    // resolved by Trace::finalize
  std::size_t server_index = 0;
};

struct LcsService {
  std::string service_id;
  std::vector<std::size_t> instances;  // indices into Trace::lcs_instances
  double cpu_quota_per_instance = 1.0;
};

struct ServerSpec {
  std::string server_id;
  double cpu_capacity = 96.0;
  double mem_capacity = 512.0;
  std::vector<std::size_t> lcs_instances;  // indices into Trace::lcs_instances
};

// Per-tick server utilization observation (absolute cores).
struct UtilizationSample {
  double timestamp = 0.0;
  std::size_t server = 0;
  double be_cpu = 0.0;
  double lcs_cpu = 0.0;
};

struct Trace {
  std::vector<ServerSpec> servers;
  std::vector<LcsService> services;
  std::vector<LcsInstance> lcs_instances;
  std::vector<BeJob> jobs;
  double horizon = 0.0;
  std::vector<UtilizationSample> utilization;  // optional observations

  // Sorts servers/services by id and jobs by submission time, resolves
  // instance cross references and enforces every invariant.
  void finalize();

  std::optional<std::size_t> find_server(std::string_view id) const;
  std::optional<std::size_t> find_service(std::string_view id) const;
  std::size_t total_instances() const;
};

}  // namespace pism
