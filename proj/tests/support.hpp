#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "pism/generator.hpp"
#include "pism/oracle.hpp"
#include "pism/simulator.hpp"
#include "pism/types.hpp"

#include <unistd.h>

namespace pism::test {

inline Dag make_dag(const std::vector<std::pair<std::string, OpLabel>>& nodes,
                    const std::vector<std::pair<std::string, std::string>>& edges) {
  Dag d;
  for (const auto& [id, label] : nodes) d.add_node(id, label);
  for (const auto& [from, to] : edges) d.add_edge(from, to);
  return d;
}

// Three Maps feed a Join that feeds two Reduces.
inline Dag fan_in_out_dag() {
  return make_dag({{"m1", OpLabel::Map},
                   {"m2", OpLabel::Map},
                   {"m3", OpLabel::Map},
                   {"j", OpLabel::Join},
                   {"r1", OpLabel::Reduce},
                   {"r2", OpLabel::Reduce}},
                  {{"m1", "j"}, {"m2", "j"}, {"m3", "j"}, {"j", "r1"}, {"j", "r2"}});
}

inline Dag fan_in_out_missing_map() {
  return make_dag({{"m1", OpLabel::Map},
                   {"m2", OpLabel::Map},
                   {"j", OpLabel::Join},
                   {"r1", OpLabel::Reduce},
                   {"r2", OpLabel::Reduce}},
                  {{"m1", "j"}, {"m2", "j"}, {"j", "r1"}, {"j", "r2"}});
}

// Random DAG: edges only go from lower to higher position, so it is acyclic.
inline Dag random_dag(std::mt19937_64& rng, int max_nodes = 8, double edge_p = 0.35) {
  std::uniform_int_distribution<int> size(1, max_nodes);
  std::uniform_int_distribution<int> label(0, 3);
  std::bernoulli_distribution edge(edge_p);
  const int n = size(rng);
  Dag d;
  for (int i = 0; i < n; ++i) d.add_node("n" + std::to_string(i), static_cast<OpLabel>(label(rng)));
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (edge(rng)) d.add_edge_index(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    }
  }
  return d;
}

// Same graph with node ids renamed and nodes/edges inserted in shuffled order.
inline Dag permuted_copy(const Dag& d, std::mt19937_64& rng) {
  std::vector<std::size_t> order(d.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<std::size_t> new_index(d.size());
  Dag out;
  for (std::size_t i = 0; i < order.size(); ++i) {
    new_index[order[i]] = i;
    out.add_node("x" + std::to_string(rng() % 1000000) + "_" + std::to_string(i), d.nodes()[order[i]].label);
  }
  auto edges = d.edges();
  std::shuffle(edges.begin(), edges.end(), rng);
  for (auto [a, b] : edges) out.add_edge_index(new_index[a], new_index[b]);
  return out;
}

// Plain string-label Weisfeiler-Lehman features, independent of the library's hashing.
inline std::map<std::string, std::int64_t> string_wl(const Dag& d, int h) {
  std::vector<std::string> label(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) label[i] = std::string(to_string(d.nodes()[i].label));
  std::map<std::string, std::int64_t> out;
  for (const auto& l : label) ++out["0:" + l];
  std::vector<std::vector<std::size_t>> in(d.size());
  for (auto [a, b] : d.edges()) in[b].push_back(a);
  for (int r = 1; r <= h; ++r) {
    std::vector<std::string> next(d.size());
    for (std::size_t i = 0; i < d.size(); ++i) {
      std::vector<std::string> nb;
      for (auto p : in[i]) nb.push_back(label[p]);
      std::sort(nb.begin(), nb.end());
      std::string s = label[i] + "(";
      for (const auto& x : nb) s += x + ",";
      next[i] = s + ")";
    }
    label = std::move(next);
    for (const auto& l : label) ++out[std::to_string(r) + ":" + l];
  }
  return out;
}

inline std::int64_t string_kernel(const Dag& a, const Dag& b, int h) {
  const auto fa = string_wl(a, h);
  const auto fb = string_wl(b, h);
  std::int64_t s = 0;
  for (const auto& [k, v] : fa) {
    auto it = fb.find(k);
    if (it != fb.end()) s += v * it->second;
  }
  return s;
}

inline GenConfig small_gen_config() {
  GenConfig g;
  g.servers = 8;
  g.services = 5;
  g.templates = 6;
  g.horizon = 4 * 3600.0;
  g.arrivals_per_server_minute = 12.0;
  g.lcs_per_server = 3.0;
  return g;
}

inline BeTask make_task(const std::string& id, double cpu, double mem, double makespan, int count = 1) {
  BeTask t;
  t.task_id = id;
  t.cpu = cpu;
  t.mem = mem;
  t.makespan = makespan;
  t.instance_count = count;
  return t;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  TempDir() {
    static int counter = 0;  // tests in one binary run sequentially
    path_ = std::filesystem::temp_directory_path() /
            ("pism_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() { std::filesystem::remove_all(path_); }
  const std::filesystem::path& path() const { return path_; }
  void write(const std::string& name, const std::string& text) const { std::ofstream(path_ / name) << text; }

 private:
  std::filesystem::path path_;
};

inline std::string read(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace pism::test
