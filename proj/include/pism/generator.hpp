#pragma once

#include <cstdint>

#include "pism/characterization.hpp"
#include "pism/types.hpp"

namespace pism {

struct GenConfig {
  std::size_t servers = 50;
  std::size_t services = 20;
  std::size_t templates = 30;
  double horizon = 2 * 86400.0;
  double arrivals_per_server_minute = 60.0;  // BE instance arrivals
  double server_cpu = 96.0;
  double server_mem = 512.0;
  double lcs_per_server = 5.0;  // mean LCS instances per server
  int min_nodes = 2;            // DAG template size range
  int max_nodes = 8;
  std::size_t heavy_templates = 1;  // templates with a rare single-instance [2,4,3] node
  double heavy_presence = 0.135;    // target P(server hosts a heavy instance) under random placement
  double resource_noise = 0.03;     // per-job multiplicative jitter on task metrics
  double count_noise = 0.2;         // per-job log-normal sigma on instance counts
  Thresholds thresholds;            // category draws stay inside these buckets

  // Throws ConfigError on nonsensical values.
  void validate() const;
};

// Pure function of (cfg, seed). Throws ConfigError when the expected load
// does not fit the cluster.
Trace generate_synthetic_trace(const GenConfig& cfg, std::uint64_t seed);

}  // namespace pism
