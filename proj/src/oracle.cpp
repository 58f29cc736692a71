#include "pism/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "pism/error.hpp"
#include "pism/stats.hpp"

namespace pism {

void OracleParams::validate() const {
  if (!(noise_std >= 0.0 && noise_std < 0.5)) throw ConfigError("oracle noise_std must be in [0, 0.5)");
  for (const auto& s : services) {
    if (!(s.base_rt > 0.0)) throw ConfigError("oracle base_rt must be positive for " + s.service_id);
    if (!(s.cpu_usage_fraction >= 0.0 && s.cpu_usage_fraction <= 1.0)) {
      throw ConfigError("oracle cpu_usage_fraction must be in [0, 1] for " + s.service_id);
    }
    for (double v : s.sensitivity) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError("oracle sensitivities must be >= 0 for " + s.service_id);
    }
  }
}

std::array<double, kCategories> category_load(const Trace& trace, const Thresholds& th) {
  std::array<double, kCategories> load{};
  if (trace.servers.empty()) return load;
  double horizon = trace.horizon;
  for (const auto& j : trace.jobs) horizon = std::max(horizon, j.submission_time);
  if (!(horizon > 0.0)) return load;
  for (const auto& j : trace.jobs) {
    for (const auto& t : j.tasks) {
      load[static_cast<std::size_t>(categorize_task(t, th).flat_index())] += t.instance_count * t.makespan;
    }
  }
  const double denom = horizon * static_cast<double>(trace.servers.size());
  for (auto& v : load) v /= denom;
  return load;
}

OracleParams make_oracle_params(const Trace& trace, const Thresholds& th, const OracleConfig& cfg,
                                std::uint64_t seed) {
  if (cfg.sparse_min < 1 || cfg.sparse_max < cfg.sparse_min) throw ConfigError("invalid sparse category range");
  if (cfg.load_max < cfg.load_min || cfg.load_min < 0.0) throw ConfigError("invalid oracle load range");
  if (cfg.dense_share < 0.0 || cfg.dense_share > 1.0) throw ConfigError("dense_share must be in [0, 1]");
  if (cfg.base_rt_min <= 0.0 || cfg.base_rt_max < cfg.base_rt_min) throw ConfigError("invalid base_rt range");

  const auto load = category_load(trace, th);
  const double total_load = std::accumulate(load.begin(), load.end(), 0.0);

  // The heavy category is the one whose per-server presence probability is
  // closest to the target; tail-heavy services react strongly to it.
  int heavy = -1;
  double heavy_gap = 0.0;
  for (int c = 0; c < kCategories; ++c) {
    const double lam = load[static_cast<std::size_t>(c)];
    if (lam <= 0.0) continue;
    const double gap = std::abs((1.0 - std::exp(-lam)) - cfg.heavy_presence);
    if (heavy < 0 || gap < heavy_gap) {
      heavy = c;
      heavy_gap = gap;
    }
  }

  // Sparse sensitivities only land on categories that are commonly present.
  std::vector<int> common;
  for (int c = 0; c < kCategories; ++c) {
    if (c != heavy && load[static_cast<std::size_t>(c)] >= 0.05) common.push_back(c);
  }
  std::sort(common.begin(), common.end(), [&](int a, int b) {
    return load[static_cast<std::size_t>(a)] > load[static_cast<std::size_t>(b)] ||
           (load[static_cast<std::size_t>(a)] == load[static_cast<std::size_t>(b)] && a < b);
  });
  if (common.size() > 24) common.resize(24);

  std::mt19937_64 rng(hash_combine(seed, 0x6f7261636c65ULL));
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<std::size_t> order(trace.services.size());
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<bool> tail_heavy(trace.services.size(), false);
  if (heavy >= 0) {
    for (int i = 0; i < cfg.tail_heavy_services && static_cast<std::size_t>(i) < order.size(); ++i) {
      tail_heavy[order[static_cast<std::size_t>(i)]] = true;
    }
  }

  OracleParams p;
  p.noise_std = cfg.noise_std;
  p.seed = seed;
  for (std::size_t s = 0; s < trace.services.size(); ++s) {
    ServiceOracle o;
    o.service_id = trace.services[s].service_id;
    o.base_rt = cfg.base_rt_min + (cfg.base_rt_max - cfg.base_rt_min) * unit(rng);
    o.cpu_usage_fraction = cfg.usage_min + (cfg.usage_max - cfg.usage_min) * unit(rng);
    // Tail-heavy services share the sparse-plus-dense background of the others
    // at a fixed load and add a large sensitivity to the rare heavy category.
    const double target =
        tail_heavy[s] ? cfg.tail_heavy_load : cfg.load_min + (cfg.load_max - cfg.load_min) * unit(rng);
    if (total_load > 0.0) o.sensitivity.fill(cfg.dense_share * target / total_load);
    std::vector<int> pool = common;
    std::shuffle(pool.begin(), pool.end(), rng);
    std::uniform_int_distribution<int> count(cfg.sparse_min, cfg.sparse_max);
    const auto m = std::min<std::size_t>(static_cast<std::size_t>(count(rng)), pool.size());
    for (std::size_t i = 0; i < m; ++i) {
      const auto c = static_cast<std::size_t>(pool[i]);
      o.sensitivity[c] += (1.0 - cfg.dense_share) * target / (static_cast<double>(m) * load[c]);
    }
    if (tail_heavy[s]) o.sensitivity[static_cast<std::size_t>(heavy)] += cfg.tail_heavy_sensitivity;
    p.services.push_back(std::move(o));
  }
  p.validate();
  return p;
}

double oracle_rt_noise_free(const ServiceOracle& service, const CompositionVector& composition) {
  double factor = 1.0;
  for (int c = 0; c < kCategories; ++c) {
    const auto n = composition[c];
    if (n != 0) factor += service.sensitivity[static_cast<std::size_t>(c)] * n;
  }
  return service.base_rt * factor;
}

double oracle_rt(const OracleParams& params, std::size_t service, const CompositionVector& composition,
                 std::uint64_t noise_key) {
  if (service >= params.services.size()) throw Error("oracle has no parameters for service index " + std::to_string(service));
  const double noise = params.noise_std > 0.0 ? params.noise_std * standard_normal(params.seed, noise_key) : 0.0;
  return oracle_rt_noise_free(params.services[service], composition) * std::max(0.05, 1.0 + noise);
}

}  // namespace pism
