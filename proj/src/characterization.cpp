#include "pism/characterization.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pism/error.hpp"
#include "pism/stats.hpp"

namespace pism {

namespace {

template <std::size_t N>
void check_increasing(const std::array<double, N>& xs, const char* name) {
  for (std::size_t i = 0; i < N; ++i) {
    if (!(xs[i] > 0.0)) throw ConfigError(std::string(name) + " thresholds must be positive");
    if (i > 0 && !(xs[i] > xs[i - 1])) {
      throw ConfigError(std::string(name) + " thresholds must be strictly increasing");
    }
  }
}

template <std::size_t N>
int bucket(double value, const std::array<double, N>& thresholds) {
  // Half-open buckets: count thresholds <= value.
  return static_cast<int>(std::upper_bound(thresholds.begin(), thresholds.end(), value) - thresholds.begin());
}

void check_metric(double value, const char* name) {
  if (!(value >= 0.0)) throw ValidationError(std::string("negative or NaN ") + name);
}

}  // namespace

void Thresholds::validate() const {
  check_increasing(alpha, "alpha");
  check_increasing(beta, "beta");
  check_increasing(gamma, "gamma");
}

TaskCategory TaskCategory::from_flat(int flat_index) {
  if (flat_index < 0 || flat_index >= kCategories) {
    throw ValidationError("category index out of range: " + std::to_string(flat_index));
  }
  return {flat_index / 20, (flat_index % 20) / 4, flat_index % 4};
}

int classify_cpu(double cpu, const Thresholds& th) {
  check_metric(cpu, "cpu");
  return bucket(cpu, th.alpha);
}

int classify_mem(double mem, const Thresholds& th) {
  check_metric(mem, "mem");
  return bucket(mem, th.beta);
}

int classify_makespan(double seconds, const Thresholds& th) {
  check_metric(seconds, "makespan");
  return bucket(seconds, th.gamma);
}

TaskCategory categorize_task(const BeTask& task, const Thresholds& th) {
  if (!(task.cpu > 0.0) || !(task.mem > 0.0) || !(task.makespan > 0.0)) {
    throw ValidationError("task " + task.task_id + ": metrics must be positive");
  }
  return {classify_cpu(task.cpu, th), classify_mem(task.mem, th), classify_makespan(task.makespan, th)};
}

CompositionVector::CompositionVector(const Counts& counts) : counts_(counts) {
  for (auto c : counts_) total_ += c;
}

void CompositionVector::apply(int category, int delta) {
  if (category < 0 || category >= kCategories) {
    throw ValidationError("category index out of range: " + std::to_string(category));
  }
  auto& slot = counts_[static_cast<std::size_t>(category)];
  if (delta == 1) {
    ++slot;
    ++total_;
  } else if (delta == -1) {
    if (slot == 0) {
      throw ValidationError("composition underflow at category " + std::to_string(category));
    }
    --slot;
    --total_;
  } else {
    throw ValidationError("composition delta must be +1 or -1");
  }
}

CompositionVector composition_apply(CompositionVector cv, const TaskCategory& category, int delta) {
  cv.apply(category.flat_index(), delta);
  return cv;
}

Thresholds fit_thresholds(std::span<const BeTask> tasks) {
  if (tasks.empty()) throw Error("fit_thresholds: no tasks");
  std::vector<double> cpu, mem, span;
  for (const auto& t : tasks) {
    cpu.push_back(t.cpu);
    mem.push_back(t.mem);
    span.push_back(t.makespan);
  }
  std::sort(cpu.begin(), cpu.end());
  std::sort(mem.begin(), mem.end());
  std::sort(span.begin(), span.end());

  auto fill = [](auto& out, const std::vector<double>& sorted) {
    const std::size_t n = out.size();
    for (std::size_t i = 0; i < n; ++i) {
      double q = nearest_rank(sorted, static_cast<double>(i + 1) / static_cast<double>(n + 1));
      if (!(q > 0.0)) q = 1e-6;
      // Quantiles of heavily tied data can coincide; nudge to keep the list strictly increasing.
      if (i > 0 && q <= out[i - 1]) q = std::nextafter(out[i - 1], INFINITY) * (1.0 + 1e-9);
      out[i] = q;
    }
  };
  Thresholds th;
  fill(th.alpha, cpu);
  fill(th.beta, mem);
  fill(th.gamma, span);
  return th;
}

}  // namespace pism
