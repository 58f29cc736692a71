#include "pism/pipeline.hpp"

#include <algorithm>
#include <future>

#include "pism/error.hpp"

namespace pism {

namespace {

// Indices of recorded ticks at or after `from`.
std::vector<std::size_t> ticks_from(const Recording& rec, double from) {
  std::vector<std::size_t> out;
  for (std::size_t t = 0; t < rec.tick_times.size(); ++t) {
    if (rec.tick_times[t] >= from) out.push_back(t);
  }
  return out;
}

std::vector<LabeledTask> label_jobs(std::span<const BeJob> jobs, GroupRegistry& registry, const Thresholds& th,
                                    bool record_member) {
  std::vector<LabeledTask> out;
  for (const auto& job : jobs) {
    const auto group = registry.assign_features(wl_features(job.dag, registry.iterations()), job.job_id, record_member);
    const auto features = extract_job_features(job, registry.group(group).tag);
    for (std::size_t t = 0; t < job.tasks.size(); ++t) {
      out.push_back({features[t], categorize_task(job.tasks[t], th)});
    }
  }
  return out;
}

struct Evaluation {
  PredictionMetrics pooled;
  std::vector<PredictionMetrics> by_service;
  PredictionMetrics util_pooled;
  std::vector<PredictionMetrics> util_by_service;
};

Evaluation evaluate_scorers(const Trace& trace, const Recording& rec, const std::vector<std::size_t>& ticks,
                            const TrainedModels& models, const std::vector<std::optional<UtilizationModel>>& util,
                            int k) {
  const std::size_t n_services = trace.services.size();
  std::vector<std::vector<int>> pred(n_services), actual(n_services), upred(n_services);
  for (auto tk : ticks) {
    for (std::size_t i = 0; i < trace.lcs_instances.size(); ++i) {
      const auto& inst = trace.lcs_instances[i];
      const auto svc = inst.service_index;
      if (!models.scorers.has(svc) || !models.tables[svc] || !util[svc]) continue;
      const CompositionVector comp(rec.composition(tk, inst.server_index));
      actual[svc].push_back(rt_to_level(rec.rt[tk * rec.lcs_instances + i], *models.tables[svc]));
      pred[svc].push_back(predict_lcs_level(*models.scorers.by_service[svc], comp));
      upred[svc].push_back(predict_from_utilization(*util[svc], rec.be_cpu[tk * rec.servers + inst.server_index]));
    }
  }
  Evaluation e;
  std::vector<int> all_pred, all_actual, all_upred;
  e.by_service.resize(n_services);
  e.util_by_service.resize(n_services);
  for (std::size_t s = 0; s < n_services; ++s) {
    if (actual[s].empty()) continue;
    e.by_service[s] = evaluate_predictions(pred[s], actual[s], k);
    e.util_by_service[s] = evaluate_predictions(upred[s], actual[s], k);
    all_pred.insert(all_pred.end(), pred[s].begin(), pred[s].end());
    all_actual.insert(all_actual.end(), actual[s].begin(), actual[s].end());
    all_upred.insert(all_upred.end(), upred[s].begin(), upred[s].end());
  }
  if (!all_actual.empty()) {
    e.pooled = evaluate_predictions(all_pred, all_actual, k);
    e.util_pooled = evaluate_predictions(all_upred, all_actual, k);
  }
  return e;
}

}  // namespace

PipelineResult run_pipeline(const Trace& trace, const OracleParams& oracle, const PipelineConfig& cfg) {
  const double horizon = cfg.sim.end < 0.0 ? trace.horizon : cfg.sim.end;
  if (!(cfg.split > 0.0) || horizon <= cfg.split + cfg.warmup) {
    throw Error("trace horizon must extend past the training split plus warmup");
  }
  if (cfg.warmup < 0.0 || cfg.warmup >= cfg.split) throw ConfigError("warmup must be in [0, split)");
  const int k = cfg.sim.k;
  PipelineResult result;
  TrainedModels& models = result.models;
  models.thresholds = cfg.sim.thresholds;

  // Phase 1: observe day one under Random.
  SimConfig train_cfg = cfg.sim;
  train_cfg.start = 0.0;
  train_cfg.end = cfg.split;
  train_cfg.measure_start = cfg.warmup;
  train_cfg.decision_log.clear();
  train_cfg.event_log.clear();
  Recording rec;
  auto observer_for = [&](int phase, SchedulerKind kind) -> SimObserver* {
    return cfg.observer ? cfg.observer(phase, kind) : nullptr;
  };
  (void)run(trace, SchedulerKind::Random, oracle, train_cfg, nullptr, observer_for(1, SchedulerKind::Random), &rec);
  const auto train_ticks = ticks_from(rec, cfg.warmup);
  if (train_ticks.size() < 2) throw Error("training replay produced fewer than two observation ticks");

  const auto split_job = std::lower_bound(trace.jobs.begin(), trace.jobs.end(), cfg.split,
                                          [](const BeJob& j, double t) { return j.submission_time < t; });
  const std::span<const BeJob> day_one(trace.jobs.begin(), split_job);
  const std::span<const BeJob> later(split_job, trace.jobs.end());

  // Groups and classifier.
  models.groups = GroupRegistry(cfg.sim.wl_iterations);
  const auto train_tasks = label_jobs(day_one, models.groups, models.thresholds, true);
  if (train_tasks.empty()) throw Error("no jobs before the training split");
  models.classifier = ClassifierEnsemble::train(train_tasks, cfg.classifier);
  result.classifier_train_tasks = train_tasks.size();
  {
    GroupRegistry probe = models.groups;
    const auto test_tasks = label_jobs(later, probe, models.thresholds, false);
    if (!test_tasks.empty()) result.classifier_metrics = evaluate(models.classifier, test_tasks);
  }

  // Percentile tables pooled per service.
  const std::size_t n_services = trace.services.size();
  const std::size_t n_inst = trace.lcs_instances.size();
  models.tables.assign(n_services, std::nullopt);
  {
    std::vector<std::vector<double>> samples(n_services);
    for (auto tk : train_ticks) {
      for (std::size_t i = 0; i < n_inst; ++i) {
        samples[trace.lcs_instances[i].service_index].push_back(rec.rt[tk * n_inst + i]);
      }
    }
    for (std::size_t s = 0; s < n_services; ++s) {
      if (samples[s].size() >= static_cast<std::size_t>(k)) {
        models.tables[s] = build_percentile_table(trace.services[s].service_id, samples[s], k);
      }
    }
  }

  // Raw weights under every scheme.
  models.raw_weights.assign(n_inst, {1.0, 1.0, 1.0, 1.0});
  for (std::size_t i = 0; i < n_inst; ++i) {
    const auto& inst = trace.lcs_instances[i];
    LcsHistory h;
    for (auto tk : train_ticks) {
      h.rt.push_back(rec.rt[tk * n_inst + i]);
      h.be_cpu.push_back(rec.be_cpu[tk * rec.servers + inst.server_index]);
    }
    auto& w = models.raw_weights[i];
    w[static_cast<std::size_t>(WeightScheme::Fair)] = raw_weight(WeightScheme::Fair, inst.cpu_quota, nullptr);
    w[static_cast<std::size_t>(WeightScheme::CpuQuota)] = raw_weight(WeightScheme::CpuQuota, inst.cpu_quota, nullptr);
    w[static_cast<std::size_t>(WeightScheme::Corr)] = raw_weight(WeightScheme::Corr, inst.cpu_quota, &h);
    w[static_cast<std::size_t>(WeightScheme::Cv)] = raw_weight(WeightScheme::Cv, inst.cpu_quota, &h);
  }

  // Per-service scoring trees and the utilization baseline.
  models.scorers.k = k;
  models.scorers.by_service.assign(n_services, std::nullopt);
  std::vector<std::optional<UtilizationModel>> util(n_services);
  for (std::size_t s = 0; s < n_services; ++s) {
    const bool withheld = std::find(cfg.withhold_services.begin(), cfg.withhold_services.end(), s) !=
                          cfg.withhold_services.end();
    if (!models.tables[s]) {
      result.cold_start_services.push_back(s);
      continue;
    }
    std::vector<CompositionVector> comps;
    std::vector<double> be;
    std::vector<int> levels;
    for (auto tk : train_ticks) {
      for (auto i : trace.services[s].instances) {
        const auto server = trace.lcs_instances[i].server_index;
        comps.emplace_back(rec.composition(tk, server));
        be.push_back(rec.be_cpu[tk * rec.servers + server]);
        levels.push_back(rt_to_level(rec.rt[tk * n_inst + i], *models.tables[s]));
      }
    }
    if (comps.size() < std::max<std::size_t>(1, cfg.predictor.min_samples)) {
      result.cold_start_services.push_back(s);
      continue;
    }
    util[s] = train_utilization_predictor(trace.services[s].service_id, be, levels, cfg.predictor);
    if (withheld) {
      result.cold_start_services.push_back(s);
      continue;
    }
    models.scorers.by_service[s] = train_predictor(trace.services[s].service_id, comps, levels, k, cfg.predictor);
  }
  rec = Recording{};

  // Phase 2: frozen models, one replay per scheduler.
  SimConfig eval_cfg = cfg.sim;
  eval_cfg.start = cfg.split;
  eval_cfg.end = horizon;
  eval_cfg.measure_start = cfg.split + cfg.warmup;
  const auto random_at = std::find(cfg.schedulers.begin(), cfg.schedulers.end(), SchedulerKind::Random);
  const bool record_in_run = random_at != cfg.schedulers.end();
  Recording eval_rec;

  std::vector<SimObserver*> observers;
  for (auto kind : cfg.schedulers) observers.push_back(observer_for(2, kind));
  auto one = [&](std::size_t idx) {
    SimConfig c = eval_cfg;
    const auto kind = cfg.schedulers[idx];
    // Each run writes its own logs.
    if (!c.decision_log.empty()) c.decision_log += "." + std::string(to_string(kind)) + ".jsonl";
    if (!c.event_log.empty()) c.event_log += "." + std::string(to_string(kind)) + ".jsonl";
    const bool record = record_in_run && idx == static_cast<std::size_t>(random_at - cfg.schedulers.begin());
    return run(trace, kind, oracle, c, &models, observers[idx], record ? &eval_rec : nullptr);
  };
  result.reports.resize(cfg.schedulers.size());
  if (cfg.parallel && cfg.schedulers.size() > 1) {
    std::vector<std::future<SimReport>> futures;
    for (std::size_t i = 0; i < cfg.schedulers.size(); ++i) futures.push_back(std::async(std::launch::async, one, i));
    for (std::size_t i = 0; i < futures.size(); ++i) result.reports[i] = futures[i].get();
  } else {
    for (std::size_t i = 0; i < cfg.schedulers.size(); ++i) result.reports[i] = one(i);
  }
  if (!record_in_run) {
    SimConfig c = eval_cfg;
    c.decision_log.clear();
    c.event_log.clear();
    (void)run(trace, SchedulerKind::Random, oracle, c, &models, observer_for(2, SchedulerKind::Random), &eval_rec);
  }

  const auto eval_ticks = ticks_from(eval_rec, cfg.split + cfg.warmup);
  const auto e = evaluate_scorers(trace, eval_rec, eval_ticks, models, util, k);
  result.scoring = e.pooled;
  result.scoring_by_service = e.by_service;
  result.utilization_baseline = e.util_pooled;
  result.utilization_by_service = e.util_by_service;
  std::sort(result.cold_start_services.begin(), result.cold_start_services.end());
  return result;
}

}  // namespace pism
