#include "pism/generator.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <set>

#include "pism/dag_kernel.hpp"
#include "pism/error.hpp"
#include "pism/stats.hpp"

namespace pism {

namespace {

// Draws stay this far (as a ratio) inside a bucket so per-job jitter can
// never push a value across a threshold.
constexpr double kInteriorMargin = 1.15;

// Category of the rare long-running node.
constexpr TaskCategory kHeavyCategory{2, 4, 3};

// The distributions in <random> are implementation-defined; these are not,
// so a seed reproduces the same trace on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return unit_uniform(engine_()); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double log_uniform(double lo, double hi) { return std::exp(uniform(std::log(lo), std::log(hi))); }
  int integer(int lo, int hi) {  // inclusive
    return lo + static_cast<int>(uniform() * static_cast<double>(hi - lo + 1));
  }
  double normal() {
    const double u1 = 1.0 - uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }
  double exponential(double rate) { return -std::log(1.0 - uniform()) / rate; }
  template <std::size_t N>
  int weighted(const std::array<double, N>& weights) {
    const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
    double u = uniform() * total;
    for (std::size_t i = 0; i < N; ++i) {
      if (u < weights[i]) return static_cast<int>(i);
      u -= weights[i];
    }
    return static_cast<int>(N - 1);
  }

 private:
  std::mt19937_64 engine_;
};

// Interior of bucket `cls` for a threshold list; open ends get a finite span.
template <std::size_t N>
std::pair<double, double> bucket_interior(const std::array<double, N>& edges, int cls, double low_floor,
                                          double top_span) {
  const auto c = static_cast<std::size_t>(cls);
  const double lo = c == 0 ? low_floor : edges[c - 1];
  const double hi = c == N ? edges[N - 1] * top_span : edges[c];
  return {lo * kInteriorMargin, hi / kInteriorMargin};
}

struct TemplateNode {
  std::string id;
  OpLabel label = OpLabel::Other;
  TaskCategory category;
  double cpu = 0.0;
  double mem = 0.0;
  double makespan = 0.0;
  double count = 1.0;  // base instance count
  bool heavy = false;
};

struct JobTemplate {
  Dag dag;
  JobType type = JobType::SQL;
  std::vector<TemplateNode> nodes;

  double expected_instances(double count_noise) const {
    double n = 0.0;
    for (const auto& node : nodes) n += node.heavy ? 1.0 : node.count * std::exp(0.5 * count_noise * count_noise);
    return n;
  }
};

char label_letter(OpLabel l) {
  switch (l) {
    case OpLabel::Map: return 'M';
    case OpLabel::Join: return 'J';
    case OpLabel::Reduce: return 'R';
    case OpLabel::Other: return 'O';
  }
  return 'O';
}

std::pair<int, int> count_range(OpLabel l) {
  switch (l) {
    case OpLabel::Map: return {40, 160};
    case OpLabel::Join: return {10, 40};
    case OpLabel::Reduce: return {5, 30};
    case OpLabel::Other: return {1, 10};
  }
  return {1, 10};
}

// Random connected DAG: every node after the first hangs off one or two earlier nodes.
std::pair<std::vector<OpLabel>, std::vector<std::pair<std::size_t, std::size_t>>> random_shape(Rng& rng, int n) {
  std::vector<std::pair<std::size_t, std::size_t>> edges;
  std::vector<int> in(static_cast<std::size_t>(n), 0), out(static_cast<std::size_t>(n), 0);
  for (int i = 1; i < n; ++i) {
    const int parents = (i >= 2 && rng.uniform() < 0.35) ? 2 : 1;
    std::set<int> chosen;
    while (static_cast<int>(chosen.size()) < parents) chosen.insert(rng.integer(0, i - 1));
    for (int p : chosen) {
      edges.emplace_back(static_cast<std::size_t>(p), static_cast<std::size_t>(i));
      ++out[static_cast<std::size_t>(p)];
      ++in[static_cast<std::size_t>(i)];
    }
  }
  std::vector<OpLabel> labels;
  for (std::size_t i = 0; i < static_cast<std::size_t>(n); ++i) {
    if (in[i] == 0) {
      labels.push_back(OpLabel::Map);
    } else if (in[i] >= 2) {
      labels.push_back(OpLabel::Join);
    } else if (out[i] == 0) {
      labels.push_back(OpLabel::Reduce);
    } else {
      labels.push_back(rng.uniform() < 0.5 ? OpLabel::Other : OpLabel::Map);
    }
  }
  return {labels, edges};
}

void fill_resources(TemplateNode& node, const Thresholds& th, Rng& rng) {
  const auto [clo, chi] = bucket_interior(th.alpha, node.category.cpu_class, th.alpha[0] / 5.0, 2.5);
  const auto [mlo, mhi] = bucket_interior(th.beta, node.category.mem_class, th.beta[0] / 4.0, 2.0);
  node.cpu = rng.log_uniform(clo, chi);
  node.mem = rng.log_uniform(mlo, mhi);
  if (node.category.makespan_class == 1) {
    // Short end of the bucket keeps most instances under a minute.
    const double lo = th.gamma[0] * kInteriorMargin;
    const double hi = std::max(lo, std::min(th.gamma[1] / kInteriorMargin, 56.0));
    node.makespan = rng.uniform(lo, hi);
  } else {
    const auto [slo, shi] = bucket_interior(th.gamma, node.category.makespan_class, th.gamma[0] / 10.0, 3.0);
    node.makespan = rng.log_uniform(slo, shi);
  }
}

JobTemplate make_template(Rng& rng, const GenConfig& cfg, bool heavy) {
  const int n = rng.integer(cfg.min_nodes, cfg.max_nodes);
  auto [labels, edges] = random_shape(rng, n);
  JobTemplate t;
  t.type = static_cast<JobType>(rng.integer(0, 3));
  for (int i = 0; i < n; ++i) {
    TemplateNode node;
    node.label = labels[static_cast<std::size_t>(i)];
    node.id = std::string(1, label_letter(node.label)) + std::to_string(i);
    node.category.cpu_class = rng.weighted(std::array<double, 3>{0.4, 0.4, 0.2});
    node.category.mem_class = rng.weighted(std::array<double, 5>{0.3, 0.35, 0.2, 0.1, 0.05});
    node.category.makespan_class = rng.weighted(std::array<double, 3>{0.75, 0.22, 0.03});
    // Class 3 makespans are reserved for the heavy node.
    if (node.category == kHeavyCategory) node.category.makespan_class = 2;
    const auto [lo, hi] = count_range(node.label);
    node.count = rng.integer(lo, hi);
    t.nodes.push_back(std::move(node));
  }
  if (heavy) {
    // The heavy node is an extra sink fed by the last node.
    TemplateNode node;
    node.label = OpLabel::Other;
    node.id = "O" + std::to_string(n);
    node.category = kHeavyCategory;
    node.count = 1;
    node.heavy = true;
    t.nodes.push_back(std::move(node));
    edges.emplace_back(static_cast<std::size_t>(n - 1), static_cast<std::size_t>(n));
  }
  for (auto& node : t.nodes) t.dag.add_node(node.id, node.label);
  for (auto [a, b] : edges) t.dag.add_edge_index(a, b);
  return t;
}

}  // namespace

void GenConfig::validate() const {
  if (servers == 0) throw ConfigError("gen.servers must be >= 1");
  if (services == 0) throw ConfigError("gen.services must be >= 1");
  if (templates == 0) throw ConfigError("gen.templates must be >= 1");
  if (!(horizon > 0.0)) throw ConfigError("gen.horizon must be positive");
  if (!(arrivals_per_server_minute > 0.0)) throw ConfigError("gen.arrivals_per_server_minute must be positive");
  if (!(server_cpu > 0.0) || !(server_mem > 0.0)) throw ConfigError("server capacities must be positive");
  if (lcs_per_server < 1.0 || lcs_per_server > 9.0) throw ConfigError("gen.lcs_per_server must be in [1, 9]");
  if (min_nodes < 1 || max_nodes < min_nodes || max_nodes > 16) {
    throw ConfigError("gen.min_nodes/max_nodes must satisfy 1 <= min <= max <= 16");
  }
  if (heavy_templates > templates) throw ConfigError("gen.heavy_templates exceeds gen.templates");
  if (!(heavy_presence > 0.0 && heavy_presence < 1.0)) throw ConfigError("gen.heavy_presence must be in (0, 1)");
  if (resource_noise < 0.0 || resource_noise > 0.04) throw ConfigError("gen.resource_noise must be in [0, 0.04]");
  if (count_noise < 0.0 || count_noise > 1.0) throw ConfigError("gen.count_noise must be in [0, 1]");
  thresholds.validate();
}

Trace generate_synthetic_trace(const GenConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  Rng rng(hash_combine(seed, 0x67656e6572617465ULL));
  Trace trace;
  trace.horizon = cfg.horizon;

  char buf[32];
  for (std::size_t s = 0; s < cfg.servers; ++s) {
    std::snprintf(buf, sizeof buf, "srv%04zu", s);
    trace.servers.push_back({buf, cfg.server_cpu, cfg.server_mem, {}});
  }

  // Services: small cpu quotas, memory at twice the cores.
  static constexpr std::array<double, 5> kQuotas{1, 2, 4, 8, 16};
  std::vector<double> quota(cfg.services);
  for (auto& q : quota) q = kQuotas[static_cast<std::size_t>(rng.weighted(std::array<double, 5>{0.2, 0.3, 0.25, 0.17, 0.08}))];

  // LCS instances: 1 + Binomial(8, p) per server, then every service gets at least one.
  std::vector<std::size_t> per_server(cfg.servers);
  const double p = (cfg.lcs_per_server - 1.0) / 8.0;
  for (auto& n : per_server) {
    n = 1;
    for (int i = 0; i < 8; ++i) n += rng.uniform() < p ? 1 : 0;
  }
  std::size_t total_lcs = std::accumulate(per_server.begin(), per_server.end(), std::size_t{0});
  for (std::size_t i = 0; total_lcs < cfg.services; ++i, ++total_lcs) ++per_server[i % cfg.servers];
  std::vector<std::size_t> slots(total_lcs);
  for (std::size_t i = 0; i < total_lcs; ++i) {
    slots[i] = i < cfg.services ? i : static_cast<std::size_t>(rng.integer(0, static_cast<int>(cfg.services) - 1));
  }
  for (std::size_t i = total_lcs; i > 1; --i) {
    std::swap(slots[i - 1], slots[static_cast<std::size_t>(rng.integer(0, static_cast<int>(i) - 1))]);
  }
  std::vector<std::vector<std::size_t>> hosted(cfg.servers);  // service per LCS slot
  std::size_t next = 0;
  for (std::size_t s = 0; s < cfg.servers; ++s) {
    for (std::size_t i = 0; i < per_server[s]; ++i) hosted[s].push_back(slots[next++]);
  }
  // Repair: move the largest instance off any server reserving more than half
  // its cores to the least reserved server.
  const double cap = 0.5 * cfg.server_cpu;
  auto load = [&](std::size_t s) {
    double sum = 0.0;
    for (auto svc : hosted[s]) sum += quota[svc];
    return sum;
  };
  for (std::size_t guard = 0;; ++guard) {
    std::size_t worst = 0;
    for (std::size_t s = 1; s < cfg.servers; ++s) {
      if (load(s) > load(worst)) worst = s;
    }
    if (load(worst) <= cap) break;
    std::size_t lightest = 0;
    for (std::size_t s = 1; s < cfg.servers; ++s) {
      if (load(s) < load(lightest)) lightest = s;
    }
    auto& from = hosted[worst];
    auto big = std::max_element(from.begin(), from.end(), [&](auto a, auto b) { return quota[a] < quota[b]; });
    if (guard > 10 * total_lcs || from.size() < 2 || load(lightest) + quota[*big] > cap) {
      throw ConfigError("LCS reservations do not fit in half of every server");
    }
    hosted[lightest].push_back(*big);
    from.erase(big);
  }
  double reserved = 0.0;
  next = 0;
  for (std::size_t s = 0; s < cfg.servers; ++s) {
    for (auto svc : hosted[s]) {
      LcsInstance inst;
      std::snprintf(buf, sizeof buf, "lcs%05zu", next++);
      inst.instance_id = buf;
      std::snprintf(buf, sizeof buf, "svc%03zu", svc);
      inst.service_id = buf;
      inst.server_id = trace.servers[s].server_id;
      inst.cpu_quota = quota[svc];
      inst.mem_quota = 2.0 * quota[svc];
      trace.lcs_instances.push_back(std::move(inst));
    }
    reserved = std::max(reserved, load(s));
  }

  // Templates with pairwise distinct kernel tags.
  std::vector<JobTemplate> templates;
  std::set<std::int64_t> tags;
  std::size_t attempts = 0;
  while (templates.size() < cfg.templates) {
    if (++attempts > 2000 * cfg.templates) {
      throw ConfigError("cannot build " + std::to_string(cfg.templates) + " distinct DAG templates with " +
                        std::to_string(cfg.min_nodes) + ".." + std::to_string(cfg.max_nodes) + " nodes");
    }
    const bool heavy = templates.size() < cfg.heavy_templates;
    auto t = make_template(rng, cfg, heavy);
    const auto f = wl_features(t.dag);
    if (!tags.insert(inner_product(f, f)).second) continue;
    templates.push_back(std::move(t));
  }

  // Equal job rates per template, scaled to hit the instance arrival target.
  const double instance_rate = cfg.arrivals_per_server_minute * static_cast<double>(cfg.servers) / 60.0;
  double per_job = 0.0;
  for (const auto& t : templates) per_job += t.expected_instances(cfg.count_noise);
  const double job_rate = instance_rate / per_job;

  // Heavy makespan so that a random server hosts a heavy instance with the target probability.
  double heavy_makespan = 0.0;
  if (cfg.heavy_templates > 0) {
    const double concurrent = -std::log(1.0 - cfg.heavy_presence) * static_cast<double>(cfg.servers);
    heavy_makespan = concurrent / (job_rate * static_cast<double>(cfg.heavy_templates));
    if (heavy_makespan < cfg.thresholds.gamma[2] * kInteriorMargin) {
      throw ConfigError("heavy_presence is too low for the arrival rate: heavy makespan would fall below " +
                        std::to_string(cfg.thresholds.gamma[2]) + " s");
    }
  }
  for (auto& t : templates) {
    for (auto& node : t.nodes) {
      fill_resources(node, cfg.thresholds, rng);
      if (node.heavy) node.makespan = heavy_makespan;
    }
  }

  // Feasibility: mean BE cores per server must fit next to the largest LCS reservation.
  double be_cores = 0.0, be_mem = 0.0;
  for (const auto& t : templates) {
    for (const auto& node : t.nodes) {
      const double n = node.heavy ? 1.0 : node.count;
      be_cores += job_rate * n * node.cpu * node.makespan;
      be_mem += job_rate * n * node.mem * node.makespan;
    }
  }
  be_cores /= static_cast<double>(cfg.servers);
  be_mem /= static_cast<double>(cfg.servers);
  if (be_cores + reserved > 0.85 * cfg.server_cpu || be_mem + 2.0 * reserved > 0.85 * cfg.server_mem) {
    throw ConfigError("requested BE load exceeds cluster capacity");
  }

  // Poisson submissions per template.
  struct Pending {
    double time;
    std::size_t tmpl;
  };
  std::vector<Pending> submissions;
  for (std::size_t t = 0; t < templates.size(); ++t) {
    for (double time = rng.exponential(job_rate); time < cfg.horizon; time += rng.exponential(job_rate)) {
      submissions.push_back({time, t});
    }
  }
  std::sort(submissions.begin(), submissions.end(), [](const Pending& a, const Pending& b) {
    return a.time < b.time || (a.time == b.time && a.tmpl < b.tmpl);
  });

  const double jitter_cap = 3.0 * cfg.resource_noise;
  auto jitter = [&] { return 1.0 + std::clamp(cfg.resource_noise * rng.normal(), -jitter_cap, jitter_cap); };
  trace.jobs.reserve(submissions.size());
  for (std::size_t j = 0; j < submissions.size(); ++j) {
    const auto& tmpl = templates[submissions[j].tmpl];
    BeJob job;
    std::snprintf(buf, sizeof buf, "job%07zu", j);
    job.job_id = buf;
    job.type = tmpl.type;
    job.submission_time = std::round(submissions[j].time * 1000.0) / 1000.0;
    for (const auto& node : tmpl.nodes) {
      BeTask task;
      task.task_id = job.job_id + "-" + node.id;
      task.job_id = job.job_id;
      task.label = node.label;
      task.instance_count =
          node.heavy ? 1
                     : std::max(1, static_cast<int>(std::lround(node.count * std::exp(cfg.count_noise * rng.normal()))));
      task.cpu = node.cpu * jitter();
      task.mem = node.mem * jitter();
      task.makespan = node.makespan * jitter();
      job.tasks.push_back(std::move(task));
    }
    // Node ids are template-local; task ids carry the job prefix.
    Dag dag;
    for (std::size_t i = 0; i < job.tasks.size(); ++i) dag.add_node(job.tasks[i].task_id, tmpl.dag.nodes()[i].label);
    for (auto [a, b] : tmpl.dag.edges()) dag.add_edge_index(a, b);
    job.dag = std::move(dag);
    trace.jobs.push_back(std::move(job));
  }

  trace.finalize();
  return trace;
}

}  // namespace pism
