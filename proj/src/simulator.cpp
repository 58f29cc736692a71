#include "pism/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <queue>
#include <random>
#include <sstream>
#include <unordered_map>

#include "pism/error.hpp"
#include "pism/stats.hpp"

namespace pism {

namespace {

struct Event {
  double time;
  EventKind kind;
  std::uint64_t seq;
  std::size_t a;  // job slot / running instance id
  std::size_t b;  // task index

  bool operator>(const Event& o) const {
    if (time != o.time) return time > o.time;
    if (kind != o.kind) return static_cast<int>(kind) > static_cast<int>(o.kind);
    return seq > o.seq;
  }
};

struct ActiveJob {
  std::size_t job = 0;  // index into Trace::jobs
  std::vector<int> waiting_preds;
  std::vector<int> remaining_instances;
  std::vector<int> true_category;
  std::vector<int> predicted_category;
  std::vector<std::vector<std::size_t>> successors;
  std::size_t open_tasks = 0;
};

struct Running {
  std::size_t server = 0;
  int category = 0;
  InstanceRequest request;
  std::size_t slot = 0;
  std::size_t task = 0;
};

struct Pending {
  std::size_t slot;
  std::size_t task;
  std::size_t ordinal;  // instance number within the task
};

constexpr std::size_t kRetryBudget = 256;

std::string instance_name(const BeTask& task, std::size_t ordinal) {
  return task.task_id + "#" + std::to_string(ordinal);
}

class Simulation {
 public:
  Simulation(const Trace& trace, SchedulerKind kind, const OracleParams& oracle, const SimConfig& cfg,
             const TrainedModels* models, SimObserver* observer, Recording* recording)
      : trace_(trace),
        kind_(kind),
        oracle_(oracle),
        cfg_(cfg),
        models_(models),
        observer_(observer),
        recording_(recording),
        rng_(hash_combine(cfg.seed, 0x72616e646f6dULL)),
        empty_models_{cfg.k, {}},
        scorer_(models ? models->scorers : empty_models_) {
    end_ = cfg.end < 0.0 ? trace.horizon : cfg.end;
    measure_start_ = cfg.measure_start < 0.0 ? cfg.start : cfg.measure_start;
    if (!(cfg.tick > 0.0)) throw ConfigError("tick must be positive");
    if (cfg.k < 2) throw ConfigError("k must be >= 2");
    if (end_ < cfg.start) throw ConfigError("simulation end precedes its start");
    if (uses_models(kind) && models == nullptr) {
      throw Error(std::string("scheduler ") + std::string(to_string(kind)) + " needs trained models");
    }
    if (oracle.services.size() != trace.services.size()) throw Error("oracle does not cover every service");
    if (models) {
      if (models->raw_weights.size() != trace.lcs_instances.size()) throw Error("trained weights do not match the trace");
      if (models->tables.size() != trace.services.size()) throw Error("trained tables do not match the trace");
      groups_ = models->groups;
    }
    setup_servers();
    scorer_.reset(servers_.size());
    if (!cfg.decision_log.empty()) {
      decision_log_.open(cfg.decision_log);
      if (!decision_log_) throw Error("cannot write decision log " + cfg.decision_log);
    }
    if (!cfg.event_log.empty()) {
      event_log_.open(cfg.event_log);
      if (!event_log_) throw Error("cannot write event log " + cfg.event_log);
      write_event_header();
    }
  }

  SimReport execute() {
    if (recording_) {
      *recording_ = Recording{};
      recording_->servers = servers_.size();
      recording_->lcs_instances = trace_.lcs_instances.size();
    }
    const auto first_job = std::lower_bound(trace_.jobs.begin(), trace_.jobs.end(), cfg_.start,
                                            [](const BeJob& j, double t) { return j.submission_time < t; });
    next_job_ = static_cast<std::size_t>(first_job - trace_.jobs.begin());
    push_next_submission();
    tick_index_ = 1;
    push({cfg_.start + cfg_.tick, EventKind::ObservationTick, 0, 0, 0});

    while (!queue_.empty()) {
      const Event e = queue_.top();
      if (e.time > end_) break;
      queue_.pop();
      now_ = e.time;
      switch (e.kind) {
        case EventKind::JobSubmission: submit(e.a); break;
        case EventKind::InstanceStart: start_task(e.a, e.b); break;
        case EventKind::InstanceEnd: finish(e.a); break;
        case EventKind::ObservationTick: observe(); break;
      }
    }
    counters_.queued = pending_.size();
    return report();
  }

 private:
  void push(Event e) {
    e.seq = seq_++;
    queue_.push(e);
  }

  void setup_servers() {
    servers_.resize(trace_.servers.size());
    for (std::size_t s = 0; s < trace_.servers.size(); ++s) {
      auto& st = servers_[s];
      st.cpu_capacity = trace_.servers[s].cpu_capacity;
      st.mem_capacity = trace_.servers[s].mem_capacity;
      std::vector<double> raw;
      for (auto i : trace_.servers[s].lcs_instances) {
        const auto& inst = trace_.lcs_instances[i];
        st.lcs_cpu += inst.cpu_quota;
        st.lcs_mem += inst.mem_quota;
        st.lcs_services.push_back(inst.service_index);
        if (models_) {
          raw.push_back(models_->raw_weights[i][static_cast<std::size_t>(cfg_.scheme)]);
        } else if (cfg_.scheme == WeightScheme::CpuQuota) {
          raw.push_back(inst.cpu_quota);
        } else {
          raw.push_back(1.0);
        }
      }
      st.weights = normalize_weights(raw);
    }
  }

  void write_event_header() {
    nlohmann::json servers = nlohmann::json::array();
    for (std::size_t s = 0; s < servers_.size(); ++s) {
      servers.push_back({{"server_id", trace_.servers[s].server_id},
                         {"cpu_capacity", servers_[s].cpu_capacity},
                         {"mem_capacity", servers_[s].mem_capacity},
                         {"lcs_cpu", servers_[s].lcs_cpu},
                         {"lcs_mem", servers_[s].lcs_mem}});
    }
    event_log_ << nlohmann::json{{"kind", "header"},
                                 {"scheduler", to_string(kind_)},
                                 {"seed", cfg_.seed},
                                 {"config_hash", cfg_.config_hash},
                                 {"servers", servers}}
                      .dump()
               << '\n';
  }

  void push_next_submission() {
    if (next_job_ < trace_.jobs.size() && trace_.jobs[next_job_].submission_time < end_) {
      push({trace_.jobs[next_job_].submission_time, EventKind::JobSubmission, 0, next_job_, 0});
      ++next_job_;
    }
  }

  void submit(std::size_t job_index) {
    push_next_submission();
    const auto& job = trace_.jobs[job_index];
    std::size_t slot;
    if (!free_slots_.empty()) {
      slot = free_slots_.back();
      free_slots_.pop_back();
    } else {
      slot = jobs_.size();
      jobs_.emplace_back();
    }
    auto& a = jobs_[slot];
    const std::size_t n = job.tasks.size();
    a.job = job_index;
    a.waiting_preds.assign(n, 0);
    a.remaining_instances.assign(n, 0);
    a.true_category.assign(n, 0);
    a.predicted_category.assign(n, 0);
    a.successors = job.dag.out_neighbors();
    a.open_tasks = n;
    for (auto [from, to] : job.dag.edges()) ++a.waiting_preds[to];
    for (std::size_t t = 0; t < n; ++t) {
      a.remaining_instances[t] = job.tasks[t].instance_count;
      a.true_category[t] = categorize_task(job.tasks[t], cfg_.thresholds).flat_index();
    }
    if (uses_models(kind_)) {
      const auto features = wl_features(job.dag, groups_.iterations());
      const auto group = groups_.assign_features(features, job.job_id, false);
      const auto task_features = extract_job_features(job, groups_.group(group).tag);
      for (std::size_t t = 0; t < n; ++t) {
        a.predicted_category[t] = models_->classifier.predict(task_features[t]).flat_index();
      }
    }
    if (n == 0) {
      release_slot(slot);
      return;
    }
    for (std::size_t t = 0; t < n; ++t) {
      if (a.waiting_preds[t] == 0) push({now_, EventKind::InstanceStart, 0, slot, t});
    }
  }

  void release_slot(std::size_t slot) { free_slots_.push_back(slot); }

  void start_task(std::size_t slot, std::size_t task) {
    const auto& t = trace_.jobs[jobs_[slot].job].tasks[task];
    counters_.released += static_cast<std::uint64_t>(t.instance_count);
    for (int i = 0; i < t.instance_count; ++i) {
      if (!try_place(slot, task, static_cast<std::size_t>(i))) {
        pending_.push_back({slot, task, static_cast<std::size_t>(i)});
        ++counters_.requeues;
      }
    }
  }

  std::optional<PlacementDecision> choose(const InstanceRequest& req, int predicted) {
    const TaskCategory cat = TaskCategory::from_flat(predicted);
    switch (kind_) {
      case SchedulerKind::Random: {
        auto s = schedule_random(req, servers_, rng_);
        if (!s) return std::nullopt;
        return PlacementDecision{{}, *s, 0.0, {}};
      }
      case SchedulerKind::Spread: {
        auto s = schedule_spread(req, servers_);
        if (!s) return std::nullopt;
        return PlacementDecision{{}, *s, 0.0, {}};
      }
      case SchedulerKind::Stack: {
        auto s = schedule_stack(req, servers_, cfg_.stack_threshold);
        if (!s) return std::nullopt;
        return PlacementDecision{{}, *s, 0.0, {}};
      }
      case SchedulerKind::Pism:
        return schedule_pism(req, cat, servers_, scorer_);
      case SchedulerKind::SpreadPism:
        return schedule_wrapped(req, cat, servers_, SchedulerKind::Spread, scorer_, cfg_.candidates,
                                cfg_.stack_threshold);
      case SchedulerKind::StackPism:
        return schedule_wrapped(req, cat, servers_, SchedulerKind::Stack, scorer_, cfg_.candidates,
                                cfg_.stack_threshold);
    }
    return std::nullopt;
  }

  bool try_place(std::size_t slot, std::size_t task, std::size_t ordinal) {
    auto& a = jobs_[slot];
    const auto& t = trace_.jobs[a.job].tasks[task];
    const InstanceRequest req{t.cpu, t.mem};
    auto decision = choose(req, a.predicted_category[task]);
    if (!decision) return false;
    const std::size_t s = decision->server;
    if (observer_) observer_->on_decision(now_, req, *decision, servers_);
    if (decision_log_.is_open()) {
      decision_log_ << nlohmann::json{{"time", now_},
                                      {"instance_id", instance_name(t, ordinal)},
                                      {"server", s},
                                      {"server_id", trace_.servers[s].server_id},
                                      {"predicted_score", decision->predicted_score},
                                      {"category", a.true_category[task]},
                                      {"predicted_category", a.predicted_category[task]},
                                      {"cpu", req.cpu},
                                      {"mem", req.mem},
                                      {"candidate_set", decision->candidate_set}}
                           .dump()
                    << '\n';
    }
    auto& st = servers_[s];
    st.be_cpu += req.cpu;
    st.be_mem += req.mem;
    st.composition.apply(a.true_category[task], +1);
    ++st.version;
    ++counters_.placed;
    ++counters_.running;
    std::size_t id;
    if (!free_running_.empty()) {
      id = free_running_.back();
      free_running_.pop_back();
    } else {
      id = running_.size();
      running_.emplace_back();
    }
    running_[id] = {s, a.true_category[task], req, slot, task};
    push({now_ + t.makespan, EventKind::InstanceEnd, 0, id, 0});
    if (observer_) observer_->on_start(now_, s, a.true_category[task], req);
    if (event_log_.is_open()) log_instance("start", s, a.true_category[task], req);
    return true;
  }

  void log_instance(const char* what, std::size_t s, int category, const InstanceRequest& req) {
    event_log_ << nlohmann::json{{"kind", what}, {"t", now_}, {"server", s}, {"category", category},
                                 {"cpu", req.cpu}, {"mem", req.mem}}
                      .dump()
               << '\n';
  }

  void finish(std::size_t id) {
    const Running r = running_[id];
    free_running_.push_back(id);
    auto& st = servers_[r.server];
    st.be_cpu -= r.request.cpu;
    st.be_mem -= r.request.mem;
    if (st.composition.total() == 1) {
      // Avoid drift when the server empties.
      st.be_cpu = 0.0;
      st.be_mem = 0.0;
    }
    st.composition.apply(r.category, -1);
    ++st.version;
    --counters_.running;
    ++counters_.completed;
    if (observer_) observer_->on_end(now_, r.server, r.category, r.request);
    if (event_log_.is_open()) log_instance("end", r.server, r.category, r.request);

    auto& a = jobs_[r.slot];
    if (--a.remaining_instances[r.task] == 0) {
      --a.open_tasks;
      for (auto next : a.successors[r.task]) {
        if (--a.waiting_preds[next] == 0) push({now_, EventKind::InstanceStart, 0, r.slot, next});
      }
      if (a.open_tasks == 0) release_slot(r.slot);
    }
    retry_pending();
  }

  void retry_pending() {
    std::size_t attempts = 0;
    while (!pending_.empty() && attempts < kRetryBudget) {
      ++attempts;
      const auto p = pending_.front();
      if (!try_place(p.slot, p.task, p.ordinal)) break;
      pending_.pop_front();
    }
  }

  void observe() {
    const double t = now_;
    if (t + cfg_.tick <= end_) push({t + cfg_.tick, EventKind::ObservationTick, 0, 0, 0});
    counters_.queued = pending_.size();
    if (observer_) observer_->on_tick(t, servers_, counters_);
    if (event_log_.is_open()) {
      nlohmann::json comps = nlohmann::json::array();
      for (const auto& st : servers_) {
        nlohmann::json sparse = nlohmann::json::array();
        for (int c = 0; c < kCategories; ++c) {
          if (st.composition[c] != 0) sparse.push_back({c, st.composition[c]});
        }
        comps.push_back(std::move(sparse));
      }
      event_log_ << nlohmann::json{{"kind", "tick"},
                                   {"t", t},
                                   {"released", counters_.released},
                                   {"placed", counters_.placed},
                                   {"completed", counters_.completed},
                                   {"running", counters_.running},
                                   {"queued", counters_.queued},
                                   {"compositions", comps}}
                        .dump()
                 << '\n';
    }

    const auto tick_key = static_cast<std::uint64_t>(std::llround(t * 1000.0));
    const bool measured = t >= measure_start_;
    if (recording_) {
      recording_->tick_times.push_back(t);
      for (const auto& st : servers_) {
        recording_->compositions.push_back(st.composition.counts());
        recording_->be_cpu.push_back(st.be_cpu);
      }
    }
    if (!measured && !recording_) return;
    std::vector<double> rts(trace_.lcs_instances.size());
    for (std::size_t i = 0; i < trace_.lcs_instances.size(); ++i) {
      const auto& inst = trace_.lcs_instances[i];
      const auto key = hash_combine(instance_keys(i), tick_key);
      rts[i] = oracle_rt(oracle_, inst.service_index, servers_[inst.server_index].composition, key);
    }
    if (recording_) recording_->rt.insert(recording_->rt.end(), rts.begin(), rts.end());
    if (!measured) return;
    measured_rt_.insert(measured_rt_.end(), rts.begin(), rts.end());
    for (std::size_t s = 0; s < servers_.size(); ++s) {
      measured_be_cpu_.push_back(servers_[s].be_cpu);
      double lcs_usage = 0.0;
      for (auto i : trace_.servers[s].lcs_instances) {
        lcs_usage += trace_.lcs_instances[i].cpu_quota *
                     oracle_.services[trace_.lcs_instances[i].service_index].cpu_usage_fraction;
      }
      util_sum_ += (lcs_usage + servers_[s].be_cpu) / servers_[s].cpu_capacity;
    }
    ++measured_ticks_;
  }

  std::uint64_t instance_keys(std::size_t i) {
    if (instance_keys_.empty()) {
      instance_keys_.reserve(trace_.lcs_instances.size());
      for (const auto& inst : trace_.lcs_instances) instance_keys_.push_back(fnv1a(inst.instance_id));
    }
    return instance_keys_[i];
  }

  SimReport report() {
    SimReport r;
    r.scheduler = std::string(to_string(kind_));
    r.seed = cfg_.seed;
    r.config_hash = cfg_.config_hash;
    r.config = cfg_.config_echo;
    r.k = cfg_.k;
    r.measured_seconds = static_cast<double>(measured_ticks_) * cfg_.tick;
    r.score_histogram.assign(static_cast<std::size_t>(cfg_.k), 0);
    r.counters = counters_;
    r.decision_log = cfg_.decision_log;

    const std::size_t n_inst = trace_.lcs_instances.size();
    const std::size_t n_srv = servers_.size();
    const std::size_t ticks = measured_ticks_;
    if (ticks > 0) r.mean_server_cpu_util = util_sum_ / static_cast<double>(ticks * n_srv);

    // Percentile tables: trained ones when available, otherwise this run's own samples.
    std::vector<std::vector<double>> by_service(trace_.services.size());
    for (std::size_t tk = 0; tk < ticks; ++tk) {
      for (std::size_t i = 0; i < n_inst; ++i) {
        by_service[trace_.lcs_instances[i].service_index].push_back(measured_rt_[tk * n_inst + i]);
      }
    }
    std::vector<std::optional<PercentileTable>> tables(trace_.services.size());
    for (std::size_t s = 0; s < trace_.services.size(); ++s) {
      if (models_ && models_->tables[s]) {
        tables[s] = models_->tables[s];
      } else if (by_service[s].size() >= static_cast<std::size_t>(cfg_.k)) {
        tables[s] = build_percentile_table(trace_.services[s].service_id, by_service[s], cfg_.k);
      }
    }

    // Weights: frozen ones from training, or derived from this run's history.
    std::vector<std::vector<double>> weights(n_srv);
    const bool own_history = !models_ && (cfg_.scheme == WeightScheme::Corr || cfg_.scheme == WeightScheme::Cv);
    for (std::size_t s = 0; s < n_srv; ++s) {
      if (!own_history || ticks < 2) {
        weights[s] = servers_[s].weights;
        continue;
      }
      std::vector<double> raw;
      for (auto i : trace_.servers[s].lcs_instances) {
        LcsHistory h;
        for (std::size_t tk = 0; tk < ticks; ++tk) {
          h.rt.push_back(measured_rt_[tk * n_inst + i]);
          h.be_cpu.push_back(measured_be_cpu_[tk * n_srv + s]);
        }
        raw.push_back(raw_weight(cfg_.scheme, trace_.lcs_instances[i].cpu_quota, &h));
      }
      weights[s] = normalize_weights(raw);
    }

    double score_sum = 0.0;
    std::vector<int> levels;
    for (std::size_t tk = 0; tk < ticks; ++tk) {
      for (std::size_t s = 0; s < n_srv; ++s) {
        const auto& hosted = trace_.servers[s].lcs_instances;
        if (hosted.empty()) continue;
        levels.clear();
        for (auto i : hosted) {
          const auto& table = tables[trace_.lcs_instances[i].service_index];
          levels.push_back(table ? rt_to_level(measured_rt_[tk * n_inst + i], *table) : (cfg_.k + 1) / 2);
        }
        const double score = server_score(levels, weights[s]);
        score_sum += score;
        ++r.score_histogram[static_cast<std::size_t>(score_bucket(score, cfg_.k))];
        ++r.server_observations;
      }
    }
    if (r.server_observations > 0) r.mean_server_score = score_sum / static_cast<double>(r.server_observations);

    for (std::size_t s = 0; s < trace_.services.size(); ++s) {
      ServiceReport sr;
      sr.service_id = trace_.services[s].service_id;
      sr.cold_start = models_ != nullptr && !models_->scorers.has(s);
      auto& samples = by_service[s];
      sr.samples = samples.size();
      if (!samples.empty()) {
        sr.mean_rt = mean(samples);
        std::sort(samples.begin(), samples.end());
        const std::array<double, 5> ps{0.0, 0.5, 0.75, 0.9, 0.99};
        for (std::size_t q = 0; q < ps.size(); ++q) sr.percentiles[q] = nearest_rank(samples, ps[q]);
        sr.tail_heavy = is_tail_heavy(sr.percentiles[3], sr.mean_rt);
        for (auto i : trace_.services[s].instances) {
          double sum = 0.0;
          for (std::size_t tk = 0; tk < ticks; ++tk) sum += measured_rt_[tk * n_inst + i];
          sr.throughput_proxy += r.measured_seconds * 1000.0 / (sum / static_cast<double>(ticks));
        }
      }
      r.services.push_back(std::move(sr));
    }
    return r;
  }

  const Trace& trace_;
  SchedulerKind kind_;
  const OracleParams& oracle_;
  const SimConfig& cfg_;
  const TrainedModels* models_;
  SimObserver* observer_;
  Recording* recording_;
  std::mt19937_64 rng_;
  ScoringModelSet empty_models_;
  ServerScorer scorer_;
  GroupRegistry groups_;

  double end_ = 0.0;
  double measure_start_ = 0.0;
  double now_ = 0.0;
  std::uint64_t seq_ = 0;
  std::size_t next_job_ = 0;
  std::size_t tick_index_ = 0;
  std::priority_queue<Event, std::vector<Event>, std::greater<>> queue_;
  std::vector<ServerState> servers_;
  std::vector<ActiveJob> jobs_;
  std::vector<std::size_t> free_slots_;
  std::vector<Running> running_;
  std::vector<std::size_t> free_running_;
  std::deque<Pending> pending_;
  SimCounters counters_;

  std::vector<std::uint64_t> instance_keys_;
  std::vector<double> measured_rt_;      // [tick * lcs_instances + i]
  std::vector<double> measured_be_cpu_;  // [tick * servers + s]
  std::size_t measured_ticks_ = 0;
  double util_sum_ = 0.0;

  std::ofstream decision_log_;
  std::ofstream event_log_;
};

}  // namespace

int score_bucket(double score, int k) {
  const double width = static_cast<double>(k - 1) / static_cast<double>(k);
  const int b = static_cast<int>(std::floor((score - 1.0) / width));
  return std::clamp(b, 0, k - 1);
}

SimReport run(const Trace& trace, SchedulerKind kind, const OracleParams& oracle, const SimConfig& cfg,
              const TrainedModels* models, SimObserver* observer, Recording* recording) {
  Simulation sim(trace, kind, oracle, cfg, models, observer, recording);
  return sim.execute();
}

bool is_tail_heavy(double p90, double mean_rt) { return p90 >= 5.0 * mean_rt; }

std::vector<bool> classify_tails(const SimReport& report) {
  std::vector<bool> out;
  for (const auto& s : report.services) out.push_back(is_tail_heavy(s.percentiles[3], s.mean_rt));
  return out;
}

double throughput_improvement(const SimReport& a, const SimReport& b, std::string_view service_id) {
  if (a.measured_seconds != b.measured_seconds) throw Error("reports cover different measurement windows");
  const auto* sa = a.find_service(service_id);
  const auto* sb = b.find_service(service_id);
  if (!sa || !sb) throw Error("service '" + std::string(service_id) + "' missing from a report");
  if (!(sa->throughput_proxy > 0.0)) throw Error("service '" + std::string(service_id) + "' has no throughput");
  return (sb->throughput_proxy - sa->throughput_proxy) / sa->throughput_proxy;
}

const ServiceReport* SimReport::find_service(std::string_view id) const {
  for (const auto& s : services) {
    if (s.service_id == id) return &s;
  }
  return nullptr;
}

nlohmann::json SimReport::to_json() const {
  nlohmann::json svcs = nlohmann::json::array();
  for (const auto& s : services) {
    svcs.push_back({{"service_id", s.service_id},
                    {"samples", s.samples},
                    {"mean_rt", s.mean_rt},
                    {"p0", s.percentiles[0]},
                    {"p50", s.percentiles[1]},
                    {"p75", s.percentiles[2]},
                    {"p90", s.percentiles[3]},
                    {"p99", s.percentiles[4]},
                    {"tail_class", s.tail_heavy ? "tail-heavy" : "tail-light"},
                    {"throughput_proxy", s.throughput_proxy},
                    {"cold_start", s.cold_start}});
  }
  return {{"scheduler", scheduler},
          {"seed", seed},
          {"config_hash", config_hash},
          {"config", config},
          {"k", k},
          {"measured_seconds", measured_seconds},
          {"mean_server_score", mean_server_score},
          {"score_histogram", score_histogram},
          {"server_observations", server_observations},
          {"mean_server_cpu_util", mean_server_cpu_util},
          {"services", svcs},
          {"counters",
           {{"released", counters.released},
            {"placed", counters.placed},
            {"completed", counters.completed},
            {"running", counters.running},
            {"queued", counters.queued},
            {"requeues", counters.requeues}}},
          {"decision_log", decision_log},
          {"throughput_proxy_note", "sum over LCS instances of measured_seconds * 1000 / mean RT (ms)"}};
}

SimReport SimReport::from_json(const nlohmann::json& j) {
  SimReport r;
  r.scheduler = j.at("scheduler").get<std::string>();
  r.seed = j.at("seed").get<std::uint64_t>();
  r.config_hash = j.at("config_hash").get<std::string>();
  r.config = j.value("config", nlohmann::json());
  r.k = j.at("k").get<int>();
  r.measured_seconds = j.at("measured_seconds").get<double>();
  r.mean_server_score = j.at("mean_server_score").get<double>();
  r.score_histogram = j.at("score_histogram").get<std::vector<std::uint64_t>>();
  r.server_observations = j.at("server_observations").get<std::uint64_t>();
  r.mean_server_cpu_util = j.value("mean_server_cpu_util", 0.0);
  for (const auto& s : j.at("services")) {
    ServiceReport sr;
    sr.service_id = s.at("service_id").get<std::string>();
    sr.samples = s.at("samples").get<std::size_t>();
    sr.mean_rt = s.at("mean_rt").get<double>();
    sr.percentiles = {s.at("p0").get<double>(), s.at("p50").get<double>(), s.at("p75").get<double>(),
                      s.at("p90").get<double>(), s.at("p99").get<double>()};
    sr.tail_heavy = s.at("tail_class").get<std::string>() == "tail-heavy";
    sr.throughput_proxy = s.at("throughput_proxy").get<double>();
    sr.cold_start = s.value("cold_start", false);
    r.services.push_back(std::move(sr));
  }
  const auto& c = j.at("counters");
  r.counters.released = c.at("released").get<std::uint64_t>();
  r.counters.placed = c.at("placed").get<std::uint64_t>();
  r.counters.completed = c.at("completed").get<std::uint64_t>();
  r.counters.running = c.at("running").get<std::uint64_t>();
  r.counters.queued = c.at("queued").get<std::uint64_t>();
  r.counters.requeues = c.at("requeues").get<std::uint64_t>();
  r.decision_log = j.value("decision_log", std::string());
  return r;
}

std::string SimReport::histogram_csv() const {
  std::ostringstream os;
  os << "scheduler,bucket,lower,upper,count,fraction\n";
  const double width = static_cast<double>(k - 1) / static_cast<double>(k);
  for (std::size_t b = 0; b < score_histogram.size(); ++b) {
    const double frac = server_observations > 0
                            ? static_cast<double>(score_histogram[b]) / static_cast<double>(server_observations)
                            : 0.0;
    os << scheduler << ',' << b + 1 << ',' << 1.0 + width * static_cast<double>(b) << ','
       << 1.0 + width * static_cast<double>(b + 1) << ',' << score_histogram[b] << ',' << frac << '\n';
  }
  return os.str();
}

std::string SimReport::percentiles_csv() const {
  std::ostringstream os;
  os << "scheduler,service_id,samples,mean_rt,p0,p50,p75,p90,p99,tail_class,throughput_proxy,cold_start\n";
  for (const auto& s : services) {
    os << scheduler << ',' << s.service_id << ',' << s.samples << ',' << s.mean_rt;
    for (double p : s.percentiles) os << ',' << p;
    os << ',' << (s.tail_heavy ? "tail-heavy" : "tail-light") << ',' << s.throughput_proxy << ','
       << (s.cold_start ? 1 : 0) << '\n';
  }
  return os.str();
}

}  // namespace pism
