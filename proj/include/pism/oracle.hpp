#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "pism/characterization.hpp"
#include "pism/types.hpp"

namespace pism {

// Latent ground truth for LCS response times. Never visible to schedulers.
struct ServiceOracle {
  std::string service_id;
  double base_rt = 100.0;  // ms
  std::array<double, kCategories> sensitivity{};
  double cpu_usage_fraction = 0.1;  // actual LCS usage / quota
};

struct OracleParams {
  std::vector<ServiceOracle> services;  // aligned with Trace::services
  double noise_std = 0.05;
  std::uint64_t seed = 1;

  // Throws ConfigError unless noise_std in [0, 0.5) and sensitivities >= 0.
  void validate() const;
};

// Knobs for deriving OracleParams from a trace.
struct OracleConfig {
  double noise_std = 0.05;
  double base_rt_min = 20.0;
  double base_rt_max = 400.0;
  int sparse_min = 3;  // categories each service is strongly sensitive to
  int sparse_max = 7;
  double load_min = 0.8;  // expected fractional RT increase under uniform random placement
  double load_max = 1.8;
  double dense_share = 0.15;  // part of the load spread over every category
  int tail_heavy_services = 2;
  double heavy_presence = 0.135;  // target P(server hosts a heavy-category instance)
  double tail_heavy_sensitivity = 60.0;
  double tail_heavy_load = 0.4;
  double usage_min = 0.05;
  double usage_max = 0.20;
};

// Expected running instances per server for each category when the trace's
// instances are spread uniformly over its servers.
std::array<double, kCategories> category_load(const Trace& trace, const Thresholds& th);

OracleParams make_oracle_params(const Trace& trace, const Thresholds& th, const OracleConfig& cfg,
                                std::uint64_t seed);

// base_rt * (1 + sum_c s_c * n_c) * (1 + N(0, noise_std)); the normal draw is
// a pure function of (seed, noise_key). The noise factor is floored at 0.05.
double oracle_rt(const OracleParams& params, std::size_t service, const CompositionVector& composition,
                 std::uint64_t noise_key);

double oracle_rt_noise_free(const ServiceOracle& service, const CompositionVector& composition);

}  // namespace pism
