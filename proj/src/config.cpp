#include "pism/config.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <istream>
#include <sstream>

#include "pism/error.hpp"
#include "pism/stats.hpp"

namespace pism {

namespace {

std::string trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return std::string(s);
}

std::string fmt_double(double v) {
  char buf[64];
  auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double parse_double(const std::string& key, const std::string& text) {
  double v = 0.0;
  auto r = std::from_chars(text.data(), text.data() + text.size(), v);
  if (r.ec != std::errc() || r.ptr != text.data() + text.size()) {
    throw ConfigError(key + ": expected a number, got '" + text + "'");
  }
  return v;
}

long long parse_int(const std::string& key, const std::string& text) {
  long long v = 0;
  auto r = std::from_chars(text.data(), text.data() + text.size(), v);
  if (r.ec != std::errc() || r.ptr != text.data() + text.size()) {
    throw ConfigError(key + ": expected an integer, got '" + text + "'");
  }
  return v;
}

std::size_t parse_size(const std::string& key, const std::string& text) {
  const auto v = parse_int(key, text);
  if (v < 0) throw ConfigError(key + ": must be non-negative");
  return static_cast<std::size_t>(v);
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(text);
  while (std::getline(in, item, ',')) {
    auto t = trim(item);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

template <std::size_t N>
std::array<double, N> parse_array(const std::string& key, const std::string& text) {
  const auto items = split_list(text);
  if (items.size() != N) throw ConfigError(key + ": expected " + std::to_string(N) + " comma-separated values");
  std::array<double, N> out{};
  for (std::size_t i = 0; i < N; ++i) out[i] = parse_double(key, items[i]);
  return out;
}

template <std::size_t N>
std::string fmt_array(const std::array<double, N>& a) {
  std::string out;
  for (std::size_t i = 0; i < N; ++i) out += (i ? "," : "") + fmt_double(a[i]);
  return out;
}

struct Key {
  const char* name;
  const char* help;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

#define PISM_DOUBLE(key, field, help)                                         \
  Key {                                                                       \
    key, help, [](const RunConfig& c) { return fmt_double(c.field); },        \
        [](RunConfig& c, const std::string& v) { c.field = parse_double(key, v); } \
  }
#define PISM_SIZE(key, field, help)                                            \
  Key {                                                                        \
    key, help, [](const RunConfig& c) { return std::to_string(c.field); },     \
        [](RunConfig& c, const std::string& v) { c.field = parse_size(key, v); } \
  }
#define PISM_INT(key, field, help)                                                               \
  Key {                                                                                          \
    key, help, [](const RunConfig& c) { return std::to_string(c.field); },                       \
        [](RunConfig& c, const std::string& v) { c.field = static_cast<int>(parse_int(key, v)); } \
  }

const std::vector<Key>& keys() {
  static const std::vector<Key> table = {
      PISM_SIZE("gen.servers", gen.servers, "number of servers"),
      PISM_SIZE("gen.services", gen.services, "number of LCS services"),
      PISM_SIZE("gen.templates", gen.templates, "number of DAG templates"),
      PISM_DOUBLE("gen.horizon", gen.horizon, "trace length in seconds"),
      PISM_DOUBLE("gen.arrivals_per_server_minute", gen.arrivals_per_server_minute,
                  "target BE instance arrivals per server per minute"),
      PISM_DOUBLE("gen.server_cpu", gen.server_cpu, "cores per server"),
      PISM_DOUBLE("gen.server_mem", gen.server_mem, "GB per server"),
      PISM_DOUBLE("gen.lcs_per_server", gen.lcs_per_server, "mean LCS instances per server, in [1, 9]"),
      PISM_INT("gen.min_nodes", gen.min_nodes, "smallest template DAG"),
      PISM_INT("gen.max_nodes", gen.max_nodes, "largest template DAG"),
      PISM_SIZE("gen.heavy_templates", gen.heavy_templates, "templates with a rare long-running node"),
      PISM_DOUBLE("gen.heavy_presence", gen.heavy_presence,
                  "target probability that a server hosts a heavy instance"),
      PISM_DOUBLE("gen.resource_noise", gen.resource_noise, "per-job jitter on task metrics (<= 0.04)"),
      PISM_DOUBLE("gen.count_noise", gen.count_noise, "log-normal sigma on instance counts"),
      Key{"thresholds.alpha", "CPU bucket edges (cores)",
          [](const RunConfig& c) { return fmt_array(c.gen.thresholds.alpha); },
          [](RunConfig& c, const std::string& v) { c.gen.thresholds.alpha = parse_array<2>("thresholds.alpha", v); }},
      Key{"thresholds.beta", "memory bucket edges (GB)",
          [](const RunConfig& c) { return fmt_array(c.gen.thresholds.beta); },
          [](RunConfig& c, const std::string& v) { c.gen.thresholds.beta = parse_array<4>("thresholds.beta", v); }},
      Key{"thresholds.gamma", "makespan bucket edges (s)",
          [](const RunConfig& c) { return fmt_array(c.gen.thresholds.gamma); },
          [](RunConfig& c, const std::string& v) { c.gen.thresholds.gamma = parse_array<3>("thresholds.gamma", v); }},
      PISM_DOUBLE("oracle.noise_std", oracle.noise_std, "relative RT noise"),
      PISM_DOUBLE("oracle.base_rt_min", oracle.base_rt_min, "smallest nominal RT (ms)"),
      PISM_DOUBLE("oracle.base_rt_max", oracle.base_rt_max, "largest nominal RT (ms)"),
      PISM_INT("oracle.sparse_min", oracle.sparse_min, "fewest categories a service is sensitive to"),
      PISM_INT("oracle.sparse_max", oracle.sparse_max, "most categories a service is sensitive to"),
      PISM_DOUBLE("oracle.load_min", oracle.load_min, "smallest expected RT increase under random placement"),
      PISM_DOUBLE("oracle.load_max", oracle.load_max, "largest expected RT increase under random placement"),
      PISM_DOUBLE("oracle.dense_share", oracle.dense_share, "part of the sensitivity spread over all categories"),
      PISM_INT("oracle.tail_heavy_services", oracle.tail_heavy_services, "services sensitive to the heavy category"),
      PISM_DOUBLE("oracle.heavy_presence", oracle.heavy_presence, "presence used to pick the heavy category"),
      PISM_DOUBLE("oracle.tail_heavy_sensitivity", oracle.tail_heavy_sensitivity,
                  "RT multiplier slope for the heavy category"),
      PISM_DOUBLE("oracle.tail_heavy_load", oracle.tail_heavy_load, "background load of tail-heavy services"),
      PISM_DOUBLE("oracle.usage_min", oracle.usage_min, "smallest LCS cpu usage / quota"),
      PISM_DOUBLE("oracle.usage_max", oracle.usage_max, "largest LCS cpu usage / quota"),
      PISM_INT("kernel.iterations", wl_iterations, "WL relabeling rounds"),
      PISM_DOUBLE("classifier.c", classifier.svm.c, "SVM regularization"),
      PISM_INT("classifier.max_epochs", classifier.svm.max_epochs, "SVM passes over the data"),
      PISM_DOUBLE("classifier.tolerance", classifier.svm.tolerance, "SVM stopping tolerance"),
      PISM_SIZE("classifier.tag_buckets", classifier.tag_buckets, "group-tag vocabulary size"),
      PISM_SIZE("classifier.cross_buckets", classifier.cross_buckets, "tag x position vocabulary size"),
      PISM_INT("tree.max_depth", predictor.tree.max_depth, "scoring tree depth limit"),
      PISM_SIZE("tree.min_samples_leaf", predictor.tree.min_samples_leaf, "scoring tree leaf size"),
      PISM_SIZE("tree.min_samples", predictor.min_samples, "samples needed to train a service model"),
      PISM_INT("scoring.k", k, "interference levels"),
      Key{"scoring.scheme", "fair, cpu_quota, corr or cv",
          [](const RunConfig& c) { return std::string(to_string(c.scheme)); },
          [](RunConfig& c, const std::string& v) {
            auto s = parse_weight_scheme(v);
            if (!s) throw ConfigError("scoring.scheme: unknown scheme '" + v + "'");
            c.scheme = *s;
          }},
      PISM_DOUBLE("scheduler.stack_threshold", stack_threshold, "stack packing threshold"),
      PISM_SIZE("scheduler.candidates", candidates, "top-m candidates for wrapped schedulers"),
      Key{"scheduler.list", "comma-separated scheduler kinds",
          [](const RunConfig& c) {
            std::string out;
            for (std::size_t i = 0; i < c.schedulers.size(); ++i) out += (i ? "," : "") + std::string(to_string(c.schedulers[i]));
            return out;
          },
          [](RunConfig& c, const std::string& v) {
            c.schedulers.clear();
            for (const auto& item : split_list(v)) {
              auto k = parse_scheduler_kind(item);
              if (!k) throw ConfigError("scheduler.list: unknown scheduler '" + item + "'");
              c.schedulers.push_back(*k);
            }
          }},
      PISM_DOUBLE("sim.tick", tick, "observation interval (s)"),
      PISM_DOUBLE("sim.split", split, "end of the training day (s)"),
      PISM_DOUBLE("sim.warmup", warmup, "unmeasured start of each phase (s)"),
      Key{"seed", "master seed", [](const RunConfig& c) { return std::to_string(c.seed); },
          [](RunConfig& c, const std::string& v) {
            const auto n = parse_int("seed", v);
            if (n < 0) throw ConfigError("seed must be non-negative");
            c.seed = static_cast<std::uint64_t>(n);
          }},
  };
  return table;
}

#undef PISM_DOUBLE
#undef PISM_SIZE
#undef PISM_INT

}  // namespace

KeyValueConfig KeyValueConfig::parse(std::istream& in, const std::string& source) {
  KeyValueConfig kv;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    const auto body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) throw ParseError(source, number, "expected 'key = value'");
    auto key = trim(body.substr(0, eq));
    auto value = trim(body.substr(eq + 1));
    if (key.empty()) throw ParseError(source, number, "empty key");
    kv.set(std::move(key), std::move(value));
  }
  return kv;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  return parse(in, path.filename().string());
}

std::optional<std::string> KeyValueConfig::get(std::string_view key) const {
  auto it = values_.find(key);
  if (it == values_.end()) return std::nullopt;
  return it->second;
}

RunConfig RunConfig::from(const KeyValueConfig& kv) {
  RunConfig c;
  for (const auto& [key, value] : kv.values()) {
    auto it = std::find_if(keys().begin(), keys().end(), [&](const Key& k) { return key == k.name; });
    if (it == keys().end()) throw ConfigError("unknown config key '" + key + "'");
    it->set(c, value);
  }
  return c;
}

void RunConfig::validate() const {
  gen.validate();
  if (wl_iterations < 0) throw ConfigError("kernel.iterations must be >= 0");
  if (k < 2) throw ConfigError("scoring.k must be >= 2");
  if (!(classifier.svm.c > 0.0)) throw ConfigError("classifier.c must be positive");
  if (classifier.svm.max_epochs < 1) throw ConfigError("classifier.max_epochs must be >= 1");
  if (classifier.tag_buckets == 0 || classifier.cross_buckets == 0) throw ConfigError("classifier buckets must be >= 1");
  if (predictor.tree.max_depth < 0) throw ConfigError("tree.max_depth must be >= 0");
  if (predictor.tree.min_samples_leaf == 0) throw ConfigError("tree.min_samples_leaf must be >= 1");
  if (!(stack_threshold > 0.0 && stack_threshold <= 1.0)) throw ConfigError("scheduler.stack_threshold must be in (0, 1]");
  if (candidates == 0) throw ConfigError("scheduler.candidates must be >= 1");
  if (schedulers.empty()) throw ConfigError("scheduler.list must name at least one scheduler");
  if (!(tick > 0.0)) throw ConfigError("sim.tick must be positive");
  if (!(split > 0.0)) throw ConfigError("sim.split must be positive");
  if (warmup < 0.0 || warmup >= split) throw ConfigError("sim.warmup must be in [0, sim.split)");
  if (oracle.noise_std < 0.0 || oracle.noise_std >= 0.5) throw ConfigError("oracle.noise_std must be in [0, 0.5)");
}

std::string RunConfig::canonical_text() const {
  std::vector<std::pair<std::string, std::string>> lines;
  for (const auto& k : keys()) lines.emplace_back(k.name, k.get(*this));
  std::sort(lines.begin(), lines.end());
  std::string out;
  for (const auto& [k, v] : lines) out += k + " = " + v + "\n";
  return out;
}

std::string RunConfig::hash() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(canonical_text())));
  return buf;
}

nlohmann::json RunConfig::to_json() const {
  nlohmann::json j = nlohmann::json::object();
  for (const auto& k : keys()) j[k.name] = k.get(*this);
  return j;
}

PipelineConfig RunConfig::pipeline_config() const {
  PipelineConfig p;
  p.sim.tick = tick;
  p.sim.k = k;
  p.sim.scheme = scheme;
  p.sim.stack_threshold = stack_threshold;
  p.sim.candidates = candidates;
  p.sim.thresholds = gen.thresholds;
  p.sim.wl_iterations = wl_iterations;
  p.sim.seed = seed;
  p.sim.config_hash = hash();
  p.sim.config_echo = to_json();
  p.split = split;
  p.warmup = warmup;
  p.classifier = classifier;
  p.classifier.svm.seed = seed;
  p.predictor = predictor;
  p.schedulers = schedulers;
  return p;
}

std::string default_config_text() {
  const RunConfig defaults;
  std::string out = "# Every key with its default value.\n";
  for (const auto& k : keys()) out += "# " + std::string(k.help) + "\n" + k.name + " = " + k.get(defaults) + "\n";
  return out;
}

}  // namespace pism
