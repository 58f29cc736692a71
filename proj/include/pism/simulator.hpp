#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "pism/characterization.hpp"
#include "pism/dag_kernel.hpp"
#include "pism/oracle.hpp"
#include "pism/scheduler.hpp"
#include "pism/scoring.hpp"
#include "pism/task_classifier.hpp"
#include "pism/types.hpp"

namespace pism {

enum class EventKind { InstanceEnd = 0, JobSubmission = 1, InstanceStart = 2, ObservationTick = 3 };

struct SimConfig {
  double start = 0.0;
  double end = -1.0;            // < 0 means the trace horizon
  double measure_start = -1.0;  // < 0 means start
  double tick = 60.0;
  int k = kDefaultLevels;
  WeightScheme scheme = WeightScheme::Fair;
  double stack_threshold = kDefaultStackThreshold;
  std::size_t candidates = kDefaultCandidates;
  Thresholds thresholds;
  int wl_iterations = kDefaultWlIterations;
  std::uint64_t seed = 1;
  std::string decision_log;  // JSON-lines path, empty to skip
  std::string event_log;     // JSON-lines path, empty to skip
  std::string config_hash;
  nlohmann::json config_echo;
};

// Everything learned from the training replay.
struct TrainedModels {
  Thresholds thresholds;
  GroupRegistry groups;
  ClassifierEnsemble classifier;
  std::vector<std::optional<PercentileTable>> tables;  // by service index
  ScoringModelSet scorers;
  std::vector<std::array<double, 4>> raw_weights;  // by LCS instance, indexed by WeightScheme
};

struct ServiceReport {
  std::string service_id;
  std::size_t samples = 0;
  double mean_rt = 0.0;
  std::array<double, 5> percentiles{};  // P0, P50, P75, P90, P99
  bool tail_heavy = false;
  double throughput_proxy = 0.0;  // sum over instances of measured_seconds * 1000 / mean RT
  bool cold_start = false;        // no trained model; predicted at the neutral level
};

struct SimCounters {
  std::uint64_t released = 0;  // instances whose task became ready
  std::uint64_t placed = 0;
  std::uint64_t completed = 0;
  std::uint64_t running = 0;
  std::uint64_t queued = 0;
  std::uint64_t requeues = 0;
};

struct SimReport {
  std::string scheduler;
  std::uint64_t seed = 0;
  std::string config_hash;
  nlohmann::json config;
  int k = kDefaultLevels;
  double measured_seconds = 0.0;
  double mean_server_score = 0.0;
  std::vector<std::uint64_t> score_histogram;  // k equal-width buckets over [1, k]
  std::uint64_t server_observations = 0;       // server-ticks with >= 1 LCS instance
  double mean_server_cpu_util = 0.0;
  std::vector<ServiceReport> services;
  SimCounters counters;
  std::string decision_log;

  nlohmann::json to_json() const;
  static SimReport from_json(const nlohmann::json& j);
  std::string histogram_csv() const;
  std::string percentiles_csv() const;
  const ServiceReport* find_service(std::string_view id) const;
};

// Bucket of a server score in [1, k]: k equal-width buckets, the top one closed.
int score_bucket(double score, int k);

// Raw per-tick data captured during a run, used for training and evaluation.
struct Recording {
  std::size_t servers = 0;
  std::size_t lcs_instances = 0;
  std::vector<double> tick_times;
  std::vector<CompositionVector::Counts> compositions;  // [tick * servers + s]
  std::vector<double> be_cpu;                           // [tick * servers + s]
  std::vector<double> rt;                               // [tick * lcs_instances + i]

  const CompositionVector::Counts& composition(std::size_t tick, std::size_t server) const {
    return compositions[tick * servers + server];
  }
};

// Hooks for audits. All callbacks fire synchronously inside the event loop.
class SimObserver {
 public:
  virtual ~SimObserver() = default;
  virtual void on_start(double /*time*/, std::size_t /*server*/, int /*category*/,
                        const InstanceRequest& /*request*/) {}
  virtual void on_end(double /*time*/, std::size_t /*server*/, int /*category*/,
                      const InstanceRequest& /*request*/) {}
  virtual void on_decision(double /*time*/, const InstanceRequest& /*request*/,
                           const PlacementDecision& /*decision*/, std::span<const ServerState> /*before*/) {}
  virtual void on_tick(double /*time*/, std::span<const ServerState> /*servers*/,
                       const SimCounters& /*counters*/) {}
};

// Replays jobs submitted in [cfg.start, end) under `kind`. Model-based kinds
// need `models` (throws Error otherwise). Without models the percentile
// tables are built from the run's own samples and Corr/Cv weights from its
// own history.
SimReport run(const Trace& trace, SchedulerKind kind, const OracleParams& oracle, const SimConfig& cfg,
              const TrainedModels* models = nullptr, SimObserver* observer = nullptr,
              Recording* recording = nullptr);

// Tail-heavy iff P90 >= 5 x mean RT.
bool is_tail_heavy(double p90, double mean_rt);
std::vector<bool> classify_tails(const SimReport& report);

// (proxy_b - proxy_a) / proxy_a for one service. Throws Error when the reports
// cover different horizons or the service is missing.
double throughput_improvement(const SimReport& a, const SimReport& b, std::string_view service_id);

}  // namespace pism
