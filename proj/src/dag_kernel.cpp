#include "pism/dag_kernel.hpp"

#include <algorithm>
#include <istream>
#include <ostream>
#include <sstream>

#include "json.hpp"
#include "pism/error.hpp"
#include "pism/stats.hpp"

namespace pism {

FeatureVector wl_features(const Dag& dag, int iterations) {
  if (iterations < 0) throw Error("WL iterations must be >= 0");
  const auto& nodes = dag.nodes();
  std::vector<std::uint64_t> labels(nodes.size());
  FeatureVector features;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    labels[i] = hash_combine(0, fnv1a(to_string(nodes[i].label)));
    ++features[labels[i]];
  }
  const auto in = dag.in_neighbors();
  std::vector<std::uint64_t> next(nodes.size());
  std::vector<std::uint64_t> neighborhood;
  for (int round = 1; round <= iterations; ++round) {
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      neighborhood.clear();
      for (std::size_t p : in[i]) neighborhood.push_back(labels[p]);
      std::sort(neighborhood.begin(), neighborhood.end());
      std::uint64_t h = hash_combine(static_cast<std::uint64_t>(round), labels[i]);
      h = hash_combine(h, neighborhood.size());
      for (std::uint64_t l : neighborhood) h = hash_combine(h, l);
      next[i] = h;
    }
    labels.swap(next);
    for (std::uint64_t l : labels) ++features[l];
  }
  return features;
}

std::int64_t inner_product(const FeatureVector& a, const FeatureVector& b) {
  std::int64_t sum = 0;
  auto ia = a.begin();
  auto ib = b.begin();
  while (ia != a.end() && ib != b.end()) {
    if (ia->first < ib->first) {
      ++ia;
    } else if (ib->first < ia->first) {
      ++ib;
    } else {
      sum += ia->second * ib->second;
      ++ia;
      ++ib;
    }
  }
  return sum;
}

std::int64_t kernel(const Dag& a, const Dag& b, int iterations) {
  return inner_product(wl_features(a, iterations), wl_features(b, iterations));
}

std::optional<std::size_t> GroupRegistry::find(const FeatureVector& features) const {
  const std::int64_t self = inner_product(features, features);
  auto [lo, hi] = by_tag_.equal_range(self);
  std::optional<std::size_t> best;
  for (auto it = lo; it != hi; ++it) {
    const DagGroup& g = groups_[it->second];
    if (inner_product(features, g.representative) == g.tag) {
      if (!best || it->second < *best) best = it->second;
    }
  }
  return best;
}

std::size_t GroupRegistry::assign_features(const FeatureVector& features, const std::string& job_id,
                                           bool record_member) {
  std::size_t id;
  if (auto found = find(features)) {
    id = *found;
  } else {
    id = groups_.size();
    DagGroup g;
    g.group_id = id;
    g.tag = inner_product(features, features);
    g.representative = features;
    by_tag_.emplace(g.tag, id);
    groups_.push_back(std::move(g));
  }
  if (record_member) groups_[id].member_job_ids.push_back(job_id);
  return id;
}

std::size_t GroupRegistry::assign(const BeJob& job, bool record_member) {
  return assign_features(wl_features(job.dag, iterations_), job.job_id, record_member);
}

void GroupRegistry::write_jsonl(std::ostream& out) const {
  for (const auto& g : groups_) {
    nlohmann::json rep = nlohmann::json::array();
    for (const auto& [label, count] : g.representative) {
      std::ostringstream hex;
      hex << std::hex << label;
      rep.push_back({hex.str(), count});
    }
    nlohmann::json rec = {{"group_id", g.group_id},
                          {"tag", g.tag},
                          {"representative", rep},
                          {"member_count", g.member_job_ids.size()}};
    out << rec.dump() << '\n';
  }
}

GroupRegistry GroupRegistry::read_jsonl(std::istream& in, int iterations) {
  GroupRegistry reg(iterations);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    try {
      auto rec = nlohmann::json::parse(line);
      DagGroup g;
      g.group_id = rec.at("group_id").get<std::size_t>();
      g.tag = rec.at("tag").get<std::int64_t>();
      for (const auto& pair : rec.at("representative")) {
        g.representative[std::stoull(pair.at(0).get<std::string>(), nullptr, 16)] =
            pair.at(1).get<std::int64_t>();
      }
      if (g.group_id != reg.groups_.size()) throw Error("group ids must be dense and ordered");
      if (inner_product(g.representative, g.representative) != g.tag) {
        throw Error("tag does not match representative");
      }
      reg.by_tag_.emplace(g.tag, g.group_id);
      reg.groups_.push_back(std::move(g));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("groups.jsonl", line_no, e.what());
    } catch (const Error& e) {
      throw ParseError("groups.jsonl", line_no, e.what());
    }
  }
  return reg;
}

std::vector<DagGroup> cluster_jobs(std::span<const BeJob> jobs, int iterations) {
  GroupRegistry reg(iterations);
  for (const auto& job : jobs) reg.assign(job);
  return reg.groups();
}

std::size_t assign_group(const BeJob& job, GroupRegistry& registry) {
  return registry.assign(job);
}

}  // namespace pism
