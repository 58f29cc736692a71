#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pism/characterization.hpp"
#include "pism/scoring.hpp"

namespace pism {

enum class SchedulerKind { Random, Spread, Stack, Pism, SpreadPism, StackPism };

std::string_view to_string(SchedulerKind kind);
std::optional<SchedulerKind> parse_scheduler_kind(std::string_view text);
bool uses_models(SchedulerKind kind);

// Scheduler-visible state of one server. LCS reservations are fixed; BE
// usage and composition change as instances start and end. `version` must be
// bumped on every change so cached scores can be invalidated.
struct ServerState {
  double cpu_capacity = 96.0;
  double mem_capacity = 512.0;
  double lcs_cpu = 0.0;  // reserved LCS cpu quota
  double lcs_mem = 0.0;
  double be_cpu = 0.0;
  double be_mem = 0.0;
  CompositionVector composition;
  std::vector<std::size_t> lcs_services;  // service index per hosted LCS instance
  std::vector<double> weights;            // normalized, aligned with lcs_services
  std::uint64_t version = 0;
};

struct InstanceRequest {
  double cpu = 0.0;
  double mem = 0.0;
};

inline constexpr double kDefaultStackThreshold = 0.80;
inline constexpr std::size_t kDefaultCandidates = 10;

bool feasible(const ServerState& server, const InstanceRequest& request);

// (reserved LCS cpu + running BE cpu + request cpu) / capacity.
double projected_utilization(const ServerState& server, const InstanceRequest& request);

// Feasible servers in the base scheduler's preference order. Spread: ascending
// projected utilization. Stack: servers at or under the threshold by
// descending projected utilization, then the rest in spread order. Ties go to
// the lower index.
std::vector<std::size_t> rank_spread(const InstanceRequest& request, std::span<const ServerState> servers);
std::vector<std::size_t> rank_stack(const InstanceRequest& request, std::span<const ServerState> servers,
                                    double threshold = kDefaultStackThreshold);

std::optional<std::size_t> schedule_spread(const InstanceRequest& request, std::span<const ServerState> servers);
std::optional<std::size_t> schedule_stack(const InstanceRequest& request, std::span<const ServerState> servers,
                                          double threshold = kDefaultStackThreshold);
std::optional<std::size_t> schedule_random(const InstanceRequest& request, std::span<const ServerState> servers,
                                           std::mt19937_64& rng);

// Predicted what-if server scores with a per-(server, category) cache keyed on
// ServerState::version.
class ServerScorer {
 public:
  explicit ServerScorer(const ScoringModelSet& models, bool use_cache = true);

  double score(std::size_t index, const ServerState& server, int category);
  void reset(std::size_t server_count);

 private:
  struct Entry {
    std::uint64_t version = ~std::uint64_t{0};
    double score = 0.0;
  };
  const ScoringModelSet& models_;
  bool use_cache_;
  std::vector<std::vector<Entry>> cache_;
};

struct PlacementDecision {
  std::string instance_id;
  std::size_t server = 0;
  double predicted_score = 0.0;
  std::vector<std::size_t> candidate_set;  // wrapped schedulers only; empty means every feasible server
};

// Minimum predicted score over all feasible servers; ties go to the lowest
// projected utilization, then the lowest index.
std::optional<PlacementDecision> schedule_pism(const InstanceRequest& request, const TaskCategory& category,
                                               std::span<const ServerState> servers, ServerScorer& scorer);

// Restricts schedule_pism to the base scheduler's top-m feasible servers.
std::optional<PlacementDecision> schedule_wrapped(const InstanceRequest& request, const TaskCategory& category,
                                                  std::span<const ServerState> servers, SchedulerKind base,
                                                  ServerScorer& scorer, std::size_t m = kDefaultCandidates,
                                                  double threshold = kDefaultStackThreshold);

}  // namespace pism
