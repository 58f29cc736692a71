#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "pism/scheduler.hpp"
#include "pism/simulator.hpp"

namespace pism::test {

// Shadow bookkeeping of one simulation, rebuilt from observer callbacks only.
// Checks composition replay, capacity, conservation and scheduler contracts.
class AuditObserver : public SimObserver {
 public:
  AuditObserver(const Trace& trace, SchedulerKind kind, std::size_t candidates = kDefaultCandidates,
                double threshold = kDefaultStackThreshold)
      : kind_(kind), candidates_(candidates), threshold_(threshold) {
    for (const auto& s : trace.servers) {
      Shadow sh;
      sh.cpu_cap = s.cpu_capacity;
      sh.mem_cap = s.mem_capacity;
      for (auto i : s.lcs_instances) {
        sh.lcs_cpu += trace.lcs_instances[i].cpu_quota;
        sh.lcs_mem += trace.lcs_instances[i].mem_quota;
      }
      shadow_.push_back(sh);
    }
  }

  void on_start(double, std::size_t server, int category, const InstanceRequest& r) override {
    auto& s = shadow_.at(server);
    s.cpu += r.cpu;
    s.mem += r.mem;
    s.comp.apply(category, +1);
    ++started_;
    if (s.lcs_cpu + s.cpu > s.cpu_cap + 1e-6 || s.lcs_mem + s.mem > s.mem_cap + 1e-6) {
      fail("capacity exceeded on server " + std::to_string(server));
    }
  }

  void on_end(double, std::size_t server, int category, const InstanceRequest& r) override {
    auto& s = shadow_.at(server);
    s.cpu -= r.cpu;
    s.mem -= r.mem;
    if (s.comp[category] == 0) {
      fail("end without a matching start on server " + std::to_string(server));
      return;
    }
    s.comp.apply(category, -1);
    ++ended_;
  }

  void on_decision(double, const InstanceRequest& r, const PlacementDecision& d,
                   std::span<const ServerState> before) override {
    ++decisions_;
    if (d.server >= before.size() || !feasible(before[d.server], r)) {
      fail("infeasible placement");
      return;
    }
    const double chosen = projected_utilization(before[d.server], r);
    switch (kind_) {
      case SchedulerKind::Spread:
        if (d.server != own_spread_order(r, before).front()) fail("spread did not pick the least utilized server");
        break;
      case SchedulerKind::Stack:
        if (d.server != own_stack_order(r, before).front()) fail("stack did not pick its preferred server");
        break;
      case SchedulerKind::SpreadPism:
      case SchedulerKind::StackPism: {
        const auto order = kind_ == SchedulerKind::SpreadPism ? own_spread_order(r, before) : own_stack_order(r, before);
        const auto top = order.begin() + static_cast<std::ptrdiff_t>(std::min(candidates_, order.size()));
        if (std::find(order.begin(), top, d.server) == top) {
          fail("wrapped choice outside the base scheduler's top candidates");
        }
        if (d.candidate_set != std::vector<std::size_t>(order.begin(), top)) {
          fail("candidate set differs from the base ranking");
        }
        util_gap_ += std::abs(chosen - projected_utilization(before[order.front()], r));
        break;
      }
      default:
        break;
    }
  }

  void on_tick(double, std::span<const ServerState> servers, const SimCounters& c) override {
    ++ticks_;
    for (std::size_t s = 0; s < servers.size(); ++s) {
      if (!(servers[s].composition == shadow_[s].comp)) fail("composition differs from replay on server " + std::to_string(s));
      if (std::abs(servers[s].be_cpu - shadow_[s].cpu) > 1e-6) fail("BE cpu differs from replay");
      if (servers[s].composition.total() != count_running(s)) fail("composition total differs from running count");
    }
    if (c.released != c.completed + c.running + c.queued) fail("conservation: released != completed + running + queued");
    if (c.placed != c.completed + c.running) fail("conservation: placed != completed + running");
    if (c.running != started_ - ended_) fail("running counter differs from replay");
  }

  bool ok() const { return violations_ == 0; }
  std::size_t violations() const { return violations_; }
  const std::vector<std::string>& messages() const { return messages_; }
  std::size_t decisions() const { return decisions_; }
  std::size_t ticks() const { return ticks_; }
  double mean_util_gap() const { return decisions_ ? util_gap_ / static_cast<double>(decisions_) : 0.0; }

 private:
  struct Shadow {
    double cpu_cap = 0, mem_cap = 0, lcs_cpu = 0, lcs_mem = 0, cpu = 0, mem = 0;
    CompositionVector comp;
  };

  std::uint64_t count_running(std::size_t s) const { return shadow_[s].comp.total(); }

  void fail(const std::string& what) {
    if (messages_.size() < 10) messages_.push_back(what);
    ++violations_;
  }

  static std::vector<std::size_t> own_spread_order(const InstanceRequest& r, std::span<const ServerState> servers) {
    std::vector<std::pair<double, std::size_t>> v;
    for (std::size_t i = 0; i < servers.size(); ++i) {
      if (feasible(servers[i], r)) v.emplace_back(projected_utilization(servers[i], r), i);
    }
    std::sort(v.begin(), v.end());
    std::vector<std::size_t> out;
    for (auto& p : v) out.push_back(p.second);
    return out;
  }

  std::vector<std::size_t> own_stack_order(const InstanceRequest& r, std::span<const ServerState> servers) const {
    std::vector<std::pair<double, std::size_t>> under, over;
    for (std::size_t i = 0; i < servers.size(); ++i) {
      if (!feasible(servers[i], r)) continue;
      const double u = projected_utilization(servers[i], r);
      if (u <= threshold_) under.emplace_back(-u, i);
      else over.emplace_back(u, i);
    }
    std::sort(under.begin(), under.end());
    std::sort(over.begin(), over.end());
    std::vector<std::size_t> out;
    for (auto& p : under) out.push_back(p.second);
    for (auto& p : over) out.push_back(p.second);
    return out;
  }

  SchedulerKind kind_;
  std::size_t candidates_;
  double threshold_;
  std::vector<Shadow> shadow_;
  std::uint64_t started_ = 0, ended_ = 0;
  std::size_t decisions_ = 0, ticks_ = 0, violations_ = 0;
  double util_gap_ = 0.0;
  std::vector<std::string> messages_;
};

}  // namespace pism::test
