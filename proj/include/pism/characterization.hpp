#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "pism/types.hpp"

namespace pism {

inline constexpr int kCpuClasses = 3;
inline constexpr int kMemClasses = 5;
inline constexpr int kMakespanClasses = 4;
inline constexpr int kCategories = kCpuClasses * kMemClasses * kMakespanClasses;  // 60

// Bucket boundaries. Every bucket is half-open [lo, hi): a value equal to a
// threshold belongs to the upper bucket.
struct Thresholds {
  std::array<double, 2> alpha{0.5, 1.5};            // cores
  std::array<double, 4> beta{1.0, 4.0, 8.0, 16.0};  // GB
  std::array<double, 3> gamma{30.0, 120.0, 600.0};  // seconds

  // Throws ConfigError unless each list is positive and strictly increasing.
  void validate() const;
};

struct TaskCategory {
  int cpu_class = 0;
  int mem_class = 0;
  int makespan_class = 0;

  int flat_index() const { return cpu_class * 20 + mem_class * 4 + makespan_class; }
  static TaskCategory from_flat(int flat_index);

  friend bool operator==(const TaskCategory&, const TaskCategory&) = default;
};

int classify_cpu(double cpu, const Thresholds& th);
int classify_mem(double mem, const Thresholds& th);
int classify_makespan(double seconds, const Thresholds& th);

// Requires strictly positive metrics.
TaskCategory categorize_task(const BeTask& task, const Thresholds& th);

// Per-server count of running BE instances per category.
class CompositionVector {
 public:
  using Counts = std::array<std::uint32_t, kCategories>;

  CompositionVector() { counts_.fill(0); }
  explicit CompositionVector(const Counts& counts);

  std::uint32_t operator[](int category) const { return counts_[static_cast<std::size_t>(category)]; }
  const Counts& counts() const { return counts_; }
  std::uint64_t total() const { return total_; }

  // delta is +1 or -1; -1 on an empty slot throws ValidationError.
  void apply(int category, int delta);

  friend bool operator==(const CompositionVector& a, const CompositionVector& b) {
    return a.counts_ == b.counts_;
  }

 private:
  Counts counts_{};
  std::uint64_t total_ = 0;
};

// Value-returning form of CompositionVector::apply.
CompositionVector composition_apply(CompositionVector cv, const TaskCategory& category, int delta);

// Thresholds from trace quantiles: CPU tertiles, memory quintiles, makespan
// quartiles of the task-level metrics.
Thresholds fit_thresholds(std::span<const BeTask> tasks);

}  // namespace pism
