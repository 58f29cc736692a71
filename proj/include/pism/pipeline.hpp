#pragma once

#include <functional>
#include <vector>

#include "pism/simulator.hpp"

namespace pism {

struct PipelineConfig {
  SimConfig sim;          // start/end/measure_start are set per phase
  double split = 86400.0;  // end of the training day
  double warmup = 1800.0;  // excluded from measurement at the start of each phase
  ClassifierParams classifier;
  PredictorConfig predictor;
  std::vector<SchedulerKind> schedulers{SchedulerKind::Random, SchedulerKind::Pism};
  std::vector<std::size_t> withhold_services;  // trained models dropped (cold start)
  bool parallel = true;
  // Optional audit hook, asked once per replay with the phase (1 or 2) and
  // scheduler. Phase-2 replays may run concurrently, so each call must return
  // a distinct observer that outlives run_pipeline.
  std::function<SimObserver*(int phase, SchedulerKind kind)> observer;
};

struct PipelineResult {
  TrainedModels models;
  std::vector<SimReport> reports;  // aligned with PipelineConfig::schedulers
  ClassifierMetrics classifier_metrics;
  std::size_t classifier_train_tasks = 0;
  PredictionMetrics scoring;       // pooled over services, evaluation-day Random replay
  std::vector<PredictionMetrics> scoring_by_service;
  PredictionMetrics utilization_baseline;
  std::vector<PredictionMetrics> utilization_by_service;
  std::vector<std::size_t> cold_start_services;
};

// Day one (before `split`) is replayed under Random to collect task labels,
// RT samples and compositions; groups, classifier, percentile tables, weights
// and scoring models are trained from it. The remaining days are replayed once
// per requested scheduler with the frozen models.
PipelineResult run_pipeline(const Trace& trace, const OracleParams& oracle, const PipelineConfig& cfg);

}  // namespace pism
