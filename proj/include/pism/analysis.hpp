#pragma once

#include <cstddef>
#include <optional>
#include <vector>
#include <string_view>

#include "pism/dag_kernel.hpp"
#include "pism/stats.hpp"
#include "pism/types.hpp"

namespace pism {

enum class UtilEntity { Server, Lcs, Bej };

std::optional<UtilEntity> parse_util_entity(std::string_view text);

// CDF of per-tick CPU utilization shares (fraction of server capacity) taken
// from Trace::utilization. Server = BE + LCS usage, Lcs = LCS usage, Bej = BE usage.
Cdf analyze_utilization_cdf(const Trace& trace, UtilEntity entity);

struct CvResult {
  Cdf cdf;
  std::vector<double> values;  // per included instance
  std::size_t excluded = 0;    // instances with fewer than two RT samples
};

// Per-instance coefficient of variation of RT (population stddev).
CvResult analyze_cv(const Trace& trace, std::string_view service_id);

struct RepeatabilityTable {
  std::size_t dag_groups = 0;
  std::size_t jobs = 0;
  std::size_t infrequent_groups = 0;  // fewer than 7 jobs
  std::size_t infrequent_jobs = 0;    // jobs in infrequent groups
  std::size_t unique_groups = 0;      // exactly one job
};

RepeatabilityTable analyze_repeatability(const Trace& trace, int iterations = kDefaultWlIterations);

}  // namespace pism
