#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "pism/types.hpp"

namespace pism {

// Weisfeiler-Lehman subtree features: compressed label -> multiplicity.
// Labels are 64-bit digests; round-0 labels digest the operation label and
// every later round digests (round, own label, sorted in-neighbor labels), so
// labels are comparable across graphs without a shared dictionary.
using FeatureVector = std::map<std::uint64_t, std::int64_t>;

inline constexpr int kDefaultWlIterations = 3;

FeatureVector wl_features(const Dag& dag, int iterations = kDefaultWlIterations);

std::int64_t inner_product(const FeatureVector& a, const FeatureVector& b);
std::int64_t kernel(const Dag& a, const Dag& b, int iterations = kDefaultWlIterations);

struct DagGroup {
  std::size_t group_id = 0;
  std::int64_t tag = 0;  // <representative, representative>
  FeatureVector representative;
  std::vector<std::string> member_job_ids;
};

// Registry of job groups keyed by kernel tag. A job joins an existing group
// only when k(job, rep) == tag and k(job, job) == tag, which holds exactly
// when the two integer feature vectors are identical.
class GroupRegistry {
 public:
  explicit GroupRegistry(int iterations = kDefaultWlIterations) : iterations_(iterations) {}

  int iterations() const { return iterations_; }
  const std::vector<DagGroup>& groups() const { return groups_; }

  // Returns the group id (existing or newly created). The job id is recorded
  // as a member when `record_member` is set.
  std::size_t assign(const BeJob& job, bool record_member = true);
  std::size_t assign_features(const FeatureVector& features, const std::string& job_id,
                              bool record_member);

  // Looks up without creating a group.
  std::optional<std::size_t> find(const FeatureVector& features) const;

  const DagGroup& group(std::size_t id) const { return groups_.at(id); }

  // One JSON object per line: group_id, tag, representative, member_count.
  void write_jsonl(std::ostream& out) const;
  static GroupRegistry read_jsonl(std::istream& in, int iterations);

 private:
  int iterations_;
  std::vector<DagGroup> groups_;
  std::unordered_multimap<std::int64_t, std::size_t> by_tag_;
};

std::vector<DagGroup> cluster_jobs(std::span<const BeJob> jobs, int iterations = kDefaultWlIterations);

// Returns the id of the matching group in `registry`, creating one if needed.
std::size_t assign_group(const BeJob& job, GroupRegistry& registry);

}  // namespace pism
