#include "pism/analysis.hpp"

#include "pism/error.hpp"

namespace pism {

std::optional<UtilEntity> parse_util_entity(std::string_view text) {
  if (text == "server") return UtilEntity::Server;
  if (text == "lcs") return UtilEntity::Lcs;
  if (text == "bej") return UtilEntity::Bej;
  return std::nullopt;
}

Cdf analyze_utilization_cdf(const Trace& trace, UtilEntity entity) {
  if (trace.utilization.empty()) throw Error("trace has no utilization observations");
  std::vector<double> values;
  values.reserve(trace.utilization.size());
  for (const auto& u : trace.utilization) {
    if (u.server >= trace.servers.size()) throw ValidationError("utilization sample for unknown server index");
    const double cap = trace.servers[u.server].cpu_capacity;
    switch (entity) {
      case UtilEntity::Server: values.push_back((u.be_cpu + u.lcs_cpu) / cap); break;
      case UtilEntity::Lcs: values.push_back(u.lcs_cpu / cap); break;
      case UtilEntity::Bej: values.push_back(u.be_cpu / cap); break;
    }
  }
  return make_cdf(std::move(values));
}

CvResult analyze_cv(const Trace& trace, std::string_view service_id) {
  const auto svc = trace.find_service(service_id);
  if (!svc) throw Error("unknown service '" + std::string(service_id) + "'");
  CvResult result;
  for (auto i : trace.services[*svc].instances) {
    const auto& series = trace.lcs_instances[i].rt_series;
    if (series.size() < 2) {
      ++result.excluded;
      continue;
    }
    std::vector<double> rt;
    rt.reserve(series.size());
    for (const auto& s : series) rt.push_back(s.rt);
    result.values.push_back(coefficient_of_variation(rt));
  }
  if (!result.values.empty()) result.cdf = make_cdf(result.values);
  return result;
}

RepeatabilityTable analyze_repeatability(const Trace& trace, int iterations) {
  RepeatabilityTable t;
  const auto groups = cluster_jobs(trace.jobs, iterations);
  t.dag_groups = groups.size();
  t.jobs = trace.jobs.size();
  for (const auto& g : groups) {
    if (g.member_job_ids.size() < 7) {
      ++t.infrequent_groups;
      t.infrequent_jobs += g.member_job_ids.size();
    }
    if (g.member_job_ids.size() == 1) ++t.unique_groups;
  }
  return t;
}

}  // namespace pism
