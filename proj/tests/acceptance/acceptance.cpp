// End-to-end acceptance checks on the default synthetic configuration.
// Prints one PASS/FAIL line per criterion and exits non-zero if any fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <mutex>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "audit.hpp"
#include "pism/config.hpp"
#include "pism/generator.hpp"
#include "pism/oracle.hpp"
#include "pism/pipeline.hpp"

namespace {

using namespace pism;
using Clock = std::chrono::steady_clock;

const std::vector<std::uint64_t> kSeeds{7, 8, 9, 10, 11};  // 7 is the default seed
const std::vector<SchedulerKind> kAllKinds{SchedulerKind::Random, SchedulerKind::Spread,     SchedulerKind::Stack,
                                           SchedulerKind::Pism,   SchedulerKind::SpreadPism, SchedulerKind::StackPism};

struct AuditPool {
  const Trace* trace = nullptr;
  std::size_t candidates = kDefaultCandidates;
  double threshold = kDefaultStackThreshold;
  std::mutex mu;
  std::vector<std::pair<SchedulerKind, std::unique_ptr<test::AuditObserver>>> audits;

  std::function<SimObserver*(int, SchedulerKind)> hook() {
    return [this](int, SchedulerKind kind) {
      std::lock_guard lock(mu);
      audits.emplace_back(kind, std::make_unique<test::AuditObserver>(*trace, kind, candidates, threshold));
      return audits.back().second.get();
    };
  }
};

struct SeedRun {
  std::uint64_t seed = 0;
  double seconds = 0.0;
  Trace trace;
  OracleParams oracle;
  PipelineResult result;
  std::vector<SchedulerKind> kinds;
  std::size_t audits = 0;
  std::size_t audit_violations = 0;
  std::string first_violation;
  std::size_t wrapped_decisions = 0;
  std::size_t wrapped_violations = 0;

  const SimReport& report(SchedulerKind kind) const {
    const auto it = std::find(kinds.begin(), kinds.end(), kind);
    return result.reports.at(static_cast<std::size_t>(it - kinds.begin()));
  }
};

RunConfig config_for(std::uint64_t seed) {
  RunConfig rc;
  rc.seed = seed;
  return rc;
}

SeedRun run_seed(std::uint64_t seed, std::vector<SchedulerKind> kinds) {
  SeedRun out;
  out.seed = seed;
  out.kinds = kinds;
  RunConfig rc = config_for(seed);
  rc.schedulers = kinds;
  const auto t0 = Clock::now();
  out.trace = generate_synthetic_trace(rc.gen, seed);
  out.oracle = make_oracle_params(out.trace, rc.gen.thresholds, rc.oracle, seed);
  AuditPool pool;
  pool.trace = &out.trace;
  pool.candidates = rc.candidates;
  pool.threshold = rc.stack_threshold;
  PipelineConfig pc = rc.pipeline_config();
  pc.observer = pool.hook();
  out.result = run_pipeline(out.trace, out.oracle, pc);
  out.seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  out.audits = pool.audits.size();
  for (const auto& [kind, audit] : pool.audits) {
    out.audit_violations += audit->violations();
    if (!audit->ok() && out.first_violation.empty()) {
      out.first_violation = std::string(to_string(kind)) + ": " + audit->messages().front();
    }
    if (kind == SchedulerKind::SpreadPism || kind == SchedulerKind::StackPism) {
      out.wrapped_decisions += audit->decisions();
      out.wrapped_violations += audit->violations();
    }
  }
  std::fprintf(stderr, "seed %llu: %zu schedulers in %.1f s\n", static_cast<unsigned long long>(seed), kinds.size(),
               out.seconds);
  return out;
}

double reduction(double base, double value) { return base > 0.0 ? (base - value) / base : 0.0; }

double top_share(const SimReport& r) {
  return r.server_observations ? static_cast<double>(r.score_histogram.back()) / r.server_observations : 0.0;
}

// Service with the largest expected RT inflation under uniform placement.
std::size_t most_sensitive_service(const SeedRun& run) {
  const auto load = category_load(run.trace, Thresholds{});
  std::size_t best = 0;
  double best_load = -1.0;
  for (std::size_t s = 0; s < run.oracle.services.size(); ++s) {
    double l = 0.0;
    for (int c = 0; c < kCategories; ++c) l += run.oracle.services[s].sensitivity[c] * load[c];
    if (l > best_load) {
      best_load = l;
      best = s;
    }
  }
  return best;
}

std::string fmt(const char* f, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

struct Verdict {
  bool pass = true;
  std::string detail;
  void check(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [miss]");
  }
};

int report(int id, const char* name, const Verdict& v) {
  std::printf("%s %d %s: %s\n", v.pass ? "PASS" : "FAIL", id, name, v.detail.c_str());
  std::fflush(stdout);
  return v.pass ? 0 : 1;
}

}  // namespace

int main() {
  std::vector<SeedRun> runs;
  try {
    runs.push_back(run_seed(kSeeds[0], kAllKinds));
    for (std::size_t i = 1; i < kSeeds.size(); ++i) {
      runs.push_back(run_seed(kSeeds[i], {SchedulerKind::Random, SchedulerKind::Pism}));
    }
  } catch (const std::exception& e) {
    std::printf("FAIL 0 setup: %s\n", e.what());
    return 1;
  }
  const SeedRun& main_run = runs.front();
  int failures = 0;

  {
    Verdict v;
    for (const auto& r : runs) {
      const double red = reduction(r.report(SchedulerKind::Random).mean_server_score,
                                   r.report(SchedulerKind::Pism).mean_server_score);
      v.check(red >= 0.15, "seed " + std::to_string(r.seed) + fmt(" %.1f%%", 100 * red));
      // The first seed replays six schedulers, the others two; either way one
      // paired run is bounded by the whole pipeline.
      v.check(r.seconds <= 300.0, fmt("%.1fs", r.seconds));
    }
    failures += report(1, "mean interference score reduction vs random >= 15% per seed, <= 5 min per run", v);
  }

  {
    Verdict v;
    double base_sum = 0.0, pism_sum = 0.0;
    for (const auto& r : runs) {
      const double a = top_share(r.report(SchedulerKind::Random));
      const double b = top_share(r.report(SchedulerKind::Pism));
      base_sum += a;
      pism_sum += b;
      v.check(reduction(a, b) >= 0.40,
              "seed " + std::to_string(r.seed) + fmt(" %.4f->%.4f (%.1f%%)", a, b, 100 * reduction(a, b)));
    }
    failures += report(2, "top-level bucket occupancy reduced >= 40% vs random", v);
  }

  {
    Verdict v;
    for (const auto& r : runs) {
      const auto& m = r.result.classifier_metrics;
      const bool ok = m.tasks > 0 && *std::min_element(m.per_dim_acc.begin(), m.per_dim_acc.end()) >= 0.90 &&
                      *std::min_element(m.boundary_tolerant_acc.begin(), m.boundary_tolerant_acc.end()) >= 0.99;
      v.check(ok, "seed " + std::to_string(r.seed) +
                      fmt(" acc %.4f/%.4f/%.4f", m.per_dim_acc[0], m.per_dim_acc[1], m.per_dim_acc[2]) +
                      fmt(" tolerant %.4f/%.4f/%.4f", m.boundary_tolerant_acc[0], m.boundary_tolerant_acc[1],
                          m.boundary_tolerant_acc[2]) +
                      " n=" + std::to_string(m.tasks));
    }
    failures += report(3, "classifier per-dimension holdout >= 0.90, boundary-tolerant >= 0.99", v);
  }

  {
    Verdict v;
    for (const auto& r : runs) {
      double worst = 1.0;
      std::size_t services = 0;
      for (std::size_t s = 0; s < r.result.scoring_by_service.size(); ++s) {
        const auto& m = r.result.scoring_by_service[s];
        if (m.samples == 0) continue;
        ++services;
        worst = std::min(worst, m.acc_within_2);
      }
      const auto& p = r.result.scoring;
      const bool ok = services > 0 && worst >= 0.80 && p.busy.f1 >= 0.85 && p.idle.f1 >= 0.85 &&
                      p.severe_high_as_low_rate <= 0.005;
      v.check(ok, "seed " + std::to_string(r.seed) +
                      fmt(" within2 pooled %.4f worst-service %.4f", p.acc_within_2, worst) +
                      fmt(" busyF1 %.3f idleF1 %.3f severe %.4f%%", p.busy.f1, p.idle.f1,
                          100 * p.severe_high_as_low_rate));
    }
    failures += report(4, "scoring acc_within_2 >= 0.80 per service, BUSY/IDLE F1 >= 0.85, severe <= 0.5%", v);
  }

  {
    Verdict v;
    const double comp = main_run.result.scoring.acc_within_2;
    const double util = main_run.result.utilization_baseline.acc_within_2;
    v.check(comp - util >= 0.05, fmt("composition %.4f vs utilization %.4f (+%.1f pp)", comp, util, 100 * (comp - util)));
    for (std::size_t i = 1; i < runs.size(); ++i) {
      const double c = runs[i].result.scoring.acc_within_2;
      const double u = runs[i].result.utilization_baseline.acc_within_2;
      v.detail += fmt("; seed %.0f +%.1f pp", static_cast<double>(runs[i].seed), 100 * (c - u));
    }
    failures += report(5, "composition predictor beats utilization baseline by >= 5 pp", v);
  }

  {
    Verdict v;
    for (auto [base, wrapped] : {std::pair{SchedulerKind::Spread, SchedulerKind::SpreadPism},
                                 std::pair{SchedulerKind::Stack, SchedulerKind::StackPism}}) {
      const double a = main_run.report(base).mean_server_score;
      const double b = main_run.report(wrapped).mean_server_score;
      v.check(reduction(a, b) >= 0.05,
              std::string(to_string(wrapped)) + fmt(" %.3f->%.3f (%.1f%%)", a, b, 100 * reduction(a, b)));
    }
    v.check(main_run.wrapped_decisions > 0 && main_run.wrapped_violations == 0,
            std::to_string(main_run.wrapped_decisions) + " wrapped decisions audited, " +
                std::to_string(main_run.wrapped_violations) + " outside the base top-" +
                std::to_string(kDefaultCandidates));
    failures += report(6, "wrapped schedulers reduce mean score >= 5% vs their bases within the top-10", v);
  }

  {
    Verdict v;
    for (const auto& r : runs) {
      const auto& base = r.report(SchedulerKind::Random);
      const auto& pism = r.report(SchedulerKind::Pism);
      const auto heavy = classify_tails(base);
      double h = 0.0, l = 0.0;
      std::size_t nh = 0, nl = 0;
      for (std::size_t s = 0; s < base.services.size(); ++s) {
        const double imp = throughput_improvement(base, pism, base.services[s].service_id);
        (heavy[s] ? h : l) += imp;
        ++(heavy[s] ? nh : nl);
      }
      const double mh = nh ? h / nh : 0.0;
      const double ml = nl ? l / nl : 0.0;
      v.check(nh > 0 && nl > 0 && mh > ml, "seed " + std::to_string(r.seed) + " heavy(" + std::to_string(nh) +
                                               ")" + fmt(" %+.1f%% vs light %+.1f%%", 100 * mh, 100 * ml));
      const auto s = most_sensitive_service(r);
      const auto& id = r.trace.services[s].service_id;
      const double p0 = base.find_service(id)->percentiles[4];
      const double p1 = pism.find_service(id)->percentiles[4];
      v.check(reduction(p0, p1) >= 0.25, id + fmt(" P99 %.0f->%.0f ms (%.1f%%)", p0, p1, 100 * reduction(p0, p1)));
    }
    failures += report(7, "tail-heavy throughput gain exceeds tail-light per seed, sensitive-service P99 drops >= 25%",
                       v);
  }

  {
    Verdict v;
    const auto t0 = Clock::now();
    const int rc = std::system(PISM_PROPERTIES_BIN " --gtest_brief=1 > /dev/null 2>&1");
    const double secs = std::chrono::duration<double>(Clock::now() - t0).count();
    v.check(rc == 0 && secs <= 120.0, fmt("property suites exit %.0f in %.1fs", rc, secs));

    std::size_t audits = 0, violations = 0;
    std::string first;
    for (const auto& r : runs) {
      audits += r.audits;
      violations += r.audit_violations;
      if (first.empty()) first = r.first_violation;
    }
    v.check(violations == 0, std::to_string(audits) + " simulations audited, " + std::to_string(violations) +
                                 " violations" + (first.empty() ? "" : " (" + first + ")"));

    // Rerun one paired seed and compare reports byte for byte.
    const auto again = run_seed(runs[1].seed, runs[1].kinds);
    bool same = again.result.reports.size() == runs[1].result.reports.size();
    for (std::size_t i = 0; same && i < again.result.reports.size(); ++i) {
      same = again.result.reports[i].to_json().dump() == runs[1].result.reports[i].to_json().dump();
    }
    v.check(same, "seed " + std::to_string(runs[1].seed) + " rerun byte-identical");
    failures += report(8, "property suites, simulation audits and determinism", v);
  }

  std::printf("%s %d/8 criteria\n", failures == 0 ? "PASS" : "FAIL", 8 - failures);
  return failures == 0 ? 0 : 1;
}
