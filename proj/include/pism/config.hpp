#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "pism/generator.hpp"
#include "pism/oracle.hpp"
#include "pism/pipeline.hpp"

namespace pism {

// Plain-text "key = value" file. '#' starts a comment; blank lines ignored.
class KeyValueConfig {
 public:
  static KeyValueConfig parse(std::istream& in, const std::string& source = "<config>");
  static KeyValueConfig load(const std::filesystem::path& path);

  void set(std::string key, std::string value) { values_[std::move(key)] = std::move(value); }
  std::optional<std::string> get(std::string_view key) const;
  const std::map<std::string, std::string, std::less<>>& values() const { return values_; }

 private:
  std::map<std::string, std::string, std::less<>> values_;
};

// Merged view of every module's knobs.
struct RunConfig {
  GenConfig gen;
  OracleConfig oracle;
  int wl_iterations = kDefaultWlIterations;
  ClassifierParams classifier;
  PredictorConfig predictor;
  int k = kDefaultLevels;
  WeightScheme scheme = WeightScheme::Fair;
  double stack_threshold = kDefaultStackThreshold;
  std::size_t candidates = kDefaultCandidates;
  double tick = 60.0;
  double split = 86400.0;
  double warmup = 1800.0;
  std::vector<SchedulerKind> schedulers{SchedulerKind::Random, SchedulerKind::Pism};
  std::uint64_t seed = 7;

  // Unknown keys throw ConfigError; absent keys keep their defaults.
  static RunConfig from(const KeyValueConfig& kv);
  void validate() const;

  // Every key with its current value, one per line, sorted by key.
  std::string canonical_text() const;
  // 16 hex digits of FNV-1a over canonical_text().
  std::string hash() const;
  nlohmann::json to_json() const;

  PipelineConfig pipeline_config() const;
};

// Commented listing of every key and its default.
std::string default_config_text();

}  // namespace pism
