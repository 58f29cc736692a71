#include "pism/scheduler.hpp"

#include <algorithm>

#include "pism/error.hpp"

namespace pism {

namespace {

constexpr double kCapacityTolerance = 1e-9;

struct Candidate {
  std::size_t index;
  double utilization;
};

std::vector<Candidate> feasible_candidates(const InstanceRequest& request, std::span<const ServerState> servers) {
  std::vector<Candidate> out;
  out.reserve(servers.size());
  for (std::size_t i = 0; i < servers.size(); ++i) {
    if (feasible(servers[i], request)) out.push_back({i, projected_utilization(servers[i], request)});
  }
  return out;
}

std::optional<PlacementDecision> pick_min_score(const InstanceRequest& request, const TaskCategory& category,
                                                std::span<const ServerState> servers,
                                                std::span<const std::size_t> candidates, ServerScorer& scorer) {
  std::optional<PlacementDecision> best;
  double best_util = 0.0;
  const int flat = category.flat_index();
  for (auto i : candidates) {
    const double s = scorer.score(i, servers[i], flat);
    const double u = projected_utilization(servers[i], request);
    const bool better = !best || s < best->predicted_score ||
                        (s == best->predicted_score && (u < best_util || (u == best_util && i < best->server)));
    if (better) {
      best = PlacementDecision{{}, i, s, {}};
      best_util = u;
    }
  }
  return best;
}

}  // namespace

std::string_view to_string(SchedulerKind kind) {
  switch (kind) {
    case SchedulerKind::Random: return "random";
    case SchedulerKind::Spread: return "spread";
    case SchedulerKind::Stack: return "stack";
    case SchedulerKind::Pism: return "pism";
    case SchedulerKind::SpreadPism: return "spread+pism";
    case SchedulerKind::StackPism: return "stack+pism";
  }
  return "random";
}

std::optional<SchedulerKind> parse_scheduler_kind(std::string_view text) {
  for (auto k : {SchedulerKind::Random, SchedulerKind::Spread, SchedulerKind::Stack, SchedulerKind::Pism,
                 SchedulerKind::SpreadPism, SchedulerKind::StackPism}) {
    if (to_string(k) == text) return k;
  }
  return std::nullopt;
}

bool uses_models(SchedulerKind kind) {
  return kind == SchedulerKind::Pism || kind == SchedulerKind::SpreadPism || kind == SchedulerKind::StackPism;
}

bool feasible(const ServerState& server, const InstanceRequest& request) {
  return server.lcs_cpu + server.be_cpu + request.cpu <= server.cpu_capacity + kCapacityTolerance &&
         server.lcs_mem + server.be_mem + request.mem <= server.mem_capacity + kCapacityTolerance;
}

double projected_utilization(const ServerState& server, const InstanceRequest& request) {
  return (server.lcs_cpu + server.be_cpu + request.cpu) / server.cpu_capacity;
}

std::vector<std::size_t> rank_spread(const InstanceRequest& request, std::span<const ServerState> servers) {
  auto c = feasible_candidates(request, servers);
  std::stable_sort(c.begin(), c.end(), [](const auto& a, const auto& b) { return a.utilization < b.utilization; });
  std::vector<std::size_t> out;
  out.reserve(c.size());
  for (const auto& x : c) out.push_back(x.index);
  return out;
}

std::vector<std::size_t> rank_stack(const InstanceRequest& request, std::span<const ServerState> servers,
                                    double threshold) {
  auto c = feasible_candidates(request, servers);
  auto split = std::stable_partition(c.begin(), c.end(), [&](const auto& x) { return x.utilization <= threshold; });
  std::stable_sort(c.begin(), split, [](const auto& a, const auto& b) { return a.utilization > b.utilization; });
  std::stable_sort(split, c.end(), [](const auto& a, const auto& b) { return a.utilization < b.utilization; });
  std::vector<std::size_t> out;
  out.reserve(c.size());
  for (const auto& x : c) out.push_back(x.index);
  return out;
}

std::optional<std::size_t> schedule_spread(const InstanceRequest& request, std::span<const ServerState> servers) {
  std::optional<std::size_t> best;
  double best_u = 0.0;
  for (std::size_t i = 0; i < servers.size(); ++i) {
    if (!feasible(servers[i], request)) continue;
    const double u = projected_utilization(servers[i], request);
    if (!best || u < best_u) {
      best = i;
      best_u = u;
    }
  }
  return best;
}

std::optional<std::size_t> schedule_stack(const InstanceRequest& request, std::span<const ServerState> servers,
                                          double threshold) {
  std::optional<std::size_t> best;
  double best_u = 0.0;
  for (std::size_t i = 0; i < servers.size(); ++i) {
    if (!feasible(servers[i], request)) continue;
    const double u = projected_utilization(servers[i], request);
    if (u <= threshold && (!best || u > best_u)) {
      best = i;
      best_u = u;
    }
  }
  return best ? best : schedule_spread(request, servers);
}

std::optional<std::size_t> schedule_random(const InstanceRequest& request, std::span<const ServerState> servers,
                                           std::mt19937_64& rng) {
  std::vector<std::size_t> ok;
  for (std::size_t i = 0; i < servers.size(); ++i) {
    if (feasible(servers[i], request)) ok.push_back(i);
  }
  if (ok.empty()) return std::nullopt;
  std::uniform_int_distribution<std::size_t> pick(0, ok.size() - 1);
  return ok[pick(rng)];
}

ServerScorer::ServerScorer(const ScoringModelSet& models, bool use_cache) : models_(models), use_cache_(use_cache) {}

void ServerScorer::reset(std::size_t server_count) {
  cache_.assign(server_count, std::vector<Entry>(kCategories));
}

double ServerScorer::score(std::size_t index, const ServerState& server, int category) {
  if (!use_cache_) {
    return predict_server_score(server.composition, server.lcs_services, server.weights, category, models_);
  }
  if (index >= cache_.size()) cache_.resize(index + 1, std::vector<Entry>(kCategories));
  auto& e = cache_[index][static_cast<std::size_t>(category)];
  if (e.version != server.version) {
    e.score = predict_server_score(server.composition, server.lcs_services, server.weights, category, models_);
    e.version = server.version;
  }
  return e.score;
}

std::optional<PlacementDecision> schedule_pism(const InstanceRequest& request, const TaskCategory& category,
                                               std::span<const ServerState> servers, ServerScorer& scorer) {
  std::vector<std::size_t> all;
  for (std::size_t i = 0; i < servers.size(); ++i) {
    if (feasible(servers[i], request)) all.push_back(i);
  }
  return pick_min_score(request, category, servers, all, scorer);
}

std::optional<PlacementDecision> schedule_wrapped(const InstanceRequest& request, const TaskCategory& category,
                                                  std::span<const ServerState> servers, SchedulerKind base,
                                                  ServerScorer& scorer, std::size_t m, double threshold) {
  if (m == 0) throw ConfigError("candidate count must be >= 1");
  std::vector<std::size_t> ranked;
  switch (base) {
    case SchedulerKind::Spread:
    case SchedulerKind::SpreadPism:
      ranked = rank_spread(request, servers);
      break;
    case SchedulerKind::Stack:
    case SchedulerKind::StackPism:
      ranked = rank_stack(request, servers, threshold);
      break;
    default:
      throw ConfigError("wrapped scheduling needs a spread or stack base");
  }
  if (ranked.size() > m) ranked.resize(m);
  auto d = pick_min_score(request, category, servers, ranked, scorer);
  if (d) d->candidate_set = std::move(ranked);
  return d;
}

}  // namespace pism
