#include "mixopt/config.hpp"

#include <charconv>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace mixopt {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(s);
  while (std::getline(ss, cur, sep)) out.push_back(trim(cur));
  if (!s.empty() && s.back() == sep) out.emplace_back();
  return out;
}

bool parse_real(const std::string& s, double& out) {
  if (s.empty()) return false;
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && p == end && std::isfinite(out);
}

bool parse_int(const std::string& s, std::int64_t& out) {
  if (s.empty()) return false;
  const char* end = s.data() + s.size();
  auto [p, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && p == end;
}

}  // namespace

// ---------------------------------------------------------------------------
// KeyValueFile

KeyValueFile KeyValueFile::parse(std::istream& in, const std::string& source, const std::set<std::string>& allowed) {
  KeyValueFile f;
  f.source_ = source;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = source + ":" + std::to_string(lineno) + ": ";
    if (eq == std::string::npos) throw ConfigError(where + "expected `key = value`");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError(where + "empty key");
    if (!allowed.count(key)) throw ConfigError(where + "unknown key `" + key + "`");
    if (value.empty()) throw ConfigError(where + "key `" + key + "` has no value");
    if (f.values_.count(key))
      throw ConfigError(where + "key `" + key + "` repeats line " + std::to_string(f.values_[key].line));
    f.values_[key] = {value, lineno};
  }
  return f;
}

KeyValueFile KeyValueFile::load(const std::string& path, const std::set<std::string>& allowed) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open file");
  return parse(in, path, allowed);
}

const ConfigValue& KeyValueFile::at(const std::string& key) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError(source_ + ": missing required key `" + key + "`");
  return it->second;
}

void KeyValueFile::fail(const std::string& key, const std::string& what) const {
  auto it = values_.find(key);
  if (it == values_.end()) throw ConfigError(source_ + ": `" + key + "`: " + what);
  throw ConfigError(source_ + ":" + std::to_string(it->second.line) + ": `" + key + "`: " + what);
}

void KeyValueFile::require(const std::vector<std::string>& keys, const std::string& why) const {
  for (const auto& k : keys)
    if (!has(k)) throw ConfigError(source_ + ": missing required key `" + k + "` (needed by " + why + ")");
}

std::string KeyValueFile::text(const std::string& key) const { return at(key).text; }

double KeyValueFile::real(const std::string& key) const {
  double v;
  if (!parse_real(at(key).text, v)) fail(key, "expected a number, got `" + at(key).text + "`");
  return v;
}

std::int64_t KeyValueFile::integer(const std::string& key) const {
  std::int64_t v;
  if (!parse_int(at(key).text, v)) fail(key, "expected an integer, got `" + at(key).text + "`");
  return v;
}

Vec KeyValueFile::reals(const std::string& key) const {
  Vec out;
  for (const auto& tok : split(at(key).text, ',')) {
    double v;
    if (!parse_real(tok, v)) fail(key, "expected comma-separated numbers, got `" + tok + "`");
    out.push_back(v);
  }
  return out;
}

std::vector<Vec> KeyValueFile::groups(const std::string& key) const {
  std::vector<Vec> out;
  for (const auto& group : split(at(key).text, ';')) {
    Vec g;
    for (const auto& tok : split(group, ',')) {
      double v;
      if (!parse_real(tok, v)) fail(key, "expected `a, b; c, d` groups of numbers, got `" + tok + "`");
      g.push_back(v);
    }
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<std::vector<int>> KeyValueFile::int_groups(const std::string& key) const {
  std::vector<std::vector<int>> out;
  for (const auto& group : split(at(key).text, ';')) {
    std::vector<int> g;
    for (const auto& tok : split(group, ',')) {
      std::int64_t v;
      if (!parse_int(tok, v)) fail(key, "expected `a, b; c, d` groups of integers, got `" + tok + "`");
      g.push_back(static_cast<int>(v));
    }
    out.push_back(std::move(g));
  }
  return out;
}

std::string KeyValueFile::text_or(const std::string& key, const std::string& fallback) const {
  return has(key) ? text(key) : fallback;
}
double KeyValueFile::real_or(const std::string& key, double fallback) const { return has(key) ? real(key) : fallback; }
std::int64_t KeyValueFile::integer_or(const std::string& key, std::int64_t fallback) const {
  return has(key) ? integer(key) : fallback;
}

// ---------------------------------------------------------------------------
// Experiment config

const char* to_string(EnvKind e) {
  switch (e) {
    case EnvKind::SingleQueue: return "single-queue";
    case EnvKind::FourQueue: return "four-queue";
    case EnvKind::EightQueue: return "eight-queue";
  }
  return "?";
}

const char* to_string(Method m) {
  switch (m) {
    case Method::PrimalFd: return "primal-fd";
    case Method::DualSgd: return "dual-sgd";
    case Method::DualGrid: return "dual-grid";
    case Method::Hardness: return "hardness";
  }
  return "?";
}

const std::set<std::string>& environment_keys() {
  static const std::set<std::string> keys = {
      "capacity",     "arrival_prob", "service_rates", "queue_cost", "service_cost",
      "num_queues",   "arrival_rates", "servers",      "routing",
  };
  return keys;
}

const std::set<std::string>& experiment_keys() {
  static const std::set<std::string> keys = [] {
    std::set<std::string> k = {
        "method", "seed", "env", "env_file", "criterion", "gamma", "policies",
        "horizon", "burn_in", "eval_horizon",
        "iterations", "step", "schedule", "fd_step", "w0",
        "T", "H", "eta", "S", "record_every", "batch", "delta", "tuning", "pilot_rounds",
        "resolution", "graph_file", "steps",
    };
    k.insert(environment_keys().begin(), environment_keys().end());
    return k;
  }();
  return keys;
}

namespace {

std::string resolve_path(const std::string& base_dir, const std::string& p) {
  const std::filesystem::path path(p);
  if (path.is_absolute()) return p;
  return (std::filesystem::path(base_dir) / path).lexically_normal().string();
}

// Applies the environment keys present in `f` on top of the current settings.
void apply_environment(const KeyValueFile& f, ExperimentConfig& c) {
  if (c.env == EnvKind::SingleQueue) {
    for (const char* k : {"num_queues", "arrival_rates", "servers", "routing"})
      if (f.has(k)) f.fail(k, "not a single-queue setting");
    if (f.has("capacity")) c.single.capacity = static_cast<int>(f.integer("capacity"));
    if (f.has("arrival_prob")) c.single.arrival_prob = f.real("arrival_prob");
    if (f.has("service_rates")) c.single.service_rates = f.reals("service_rates");
    if (f.has("queue_cost")) c.single.queue_cost = f.real("queue_cost");
    if (f.has("service_cost")) c.single.service_cost = f.real("service_cost");
    return;
  }
  for (const char* k : {"arrival_prob", "queue_cost", "service_cost"})
    if (f.has(k)) f.fail(k, "not a queue-network setting");
  if (f.has("num_queues")) c.network.num_queues = static_cast<int>(f.integer("num_queues"));
  if (f.has("capacity")) c.network.capacity = static_cast<int>(f.integer("capacity"));
  if (f.has("arrival_rates")) c.network.arrival_rates = f.reals("arrival_rates");
  if (f.has("service_rates")) c.network.service_rates = f.reals("service_rates");
  if (f.has("servers")) c.network.servers = f.int_groups("servers");
  if (f.has("routing")) {
    c.network.routing.clear();
    for (double v : f.reals("routing")) {
      if (v != std::floor(v)) f.fail("routing", "expected integer queue indices");
      c.network.routing.push_back(static_cast<int>(v));
    }
  }
}

template <class Fn>
void wrap_invalid(const KeyValueFile& f, const std::string& key, Fn&& fn) {
  try {
    fn();
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidInput& e) {
    f.fail(key, e.what());
  }
}

}  // namespace

ExperimentConfig parse_experiment(std::istream& in, const std::string& source, const std::string& base_dir,
                                  std::optional<std::uint64_t> seed_override) {
  ExperimentConfig c;
  c.raw = KeyValueFile::parse(in, source, experiment_keys());
  const KeyValueFile& f = c.raw;

  c.seed_given = seed_override || f.has("seed");
  if (seed_override) {
    c.seed = *seed_override;
  } else if (f.has("seed")) {
    const std::int64_t s = f.integer("seed");
    if (s < 0) f.fail("seed", "must be non-negative");
    c.seed = static_cast<std::uint64_t>(s);
  }
  c.sgd.seed = c.seed;

  if (f.has("method")) {
    const std::string m = f.text("method");
    if (m == "primal-fd") c.method = Method::PrimalFd;
    else if (m == "dual-sgd") c.method = Method::DualSgd;
    else if (m == "dual-grid") c.method = Method::DualGrid;
    else if (m == "hardness") c.method = Method::Hardness;
    else f.fail("method", "expected primal-fd, dual-sgd, dual-grid or hardness");
  }

  if (f.has("criterion")) {
    const std::string v = f.text("criterion");
    if (v == "average") c.criterion = Criterion::Average;
    else if (v == "discounted") c.criterion = Criterion::Discounted;
    else f.fail("criterion", "expected average or discounted");
  }
  c.gamma = f.real_or("gamma", c.method == Method::Hardness ? 0.9 : 0.99);
  if (!(c.gamma > 0.0 && c.gamma < 1.0)) f.fail("gamma", "must lie in (0, 1)");

  if (f.has("env")) {
    const std::string e = f.text("env");
    if (e == "single-queue") c.env = EnvKind::SingleQueue;
    else if (e == "four-queue") { c.env = EnvKind::FourQueue; c.network = QueueNetworkConfig::four_queue(); }
    else if (e == "eight-queue") { c.env = EnvKind::EightQueue; c.network = QueueNetworkConfig::eight_queue(); }
    else f.fail("env", "expected single-queue, four-queue or eight-queue");
    c.single.discount = c.gamma;

    if (f.has("env_file")) {
      const KeyValueFile ef = KeyValueFile::load(resolve_path(base_dir, f.text("env_file")), environment_keys());
      apply_environment(ef, c);
    }
    apply_environment(f, c);
    const std::string key = f.has("env_file") ? "env_file" : "env";
    wrap_invalid(f, key, [&] {
      if (c.env == EnvKind::SingleQueue) {
        c.single.validate();
      } else {
        c.network.validate();
        if (c.env == EnvKind::FourQueue && !c.network.bounded())
          throw InvalidInput("four-queue network needs a finite capacity");
        if (c.env == EnvKind::EightQueue && c.network.bounded())
          throw InvalidInput("eight-queue network is simulated with unbounded queues; set capacity = 0");
      }
    });
  } else if (f.has("env_file")) {
    f.fail("env_file", "needs `env` to say which environment it describes");
  }

  if (f.has("policies")) {
    c.policies = f.groups("policies");
    if (f.has("env")) {
      const std::size_t want =
          c.env == EnvKind::SingleQueue ? c.single.service_rates.size() : c.network.servers.size();
      for (std::size_t i = 0; i < c.policies.size(); ++i) {
        if (c.policies[i].size() != want)
          f.fail("policies", "policy " + std::to_string(i + 1) + " has " + std::to_string(c.policies[i].size()) +
                                 " entries, expected " + std::to_string(want));
        for (double v : c.policies[i])
          if (!(v >= 0.0 && v <= 1.0)) f.fail("policies", "entries must lie in [0, 1]");
      }
    }
  }

  c.horizon = f.integer_or("horizon", c.horizon);
  c.burn_in = f.integer_or("burn_in", c.burn_in);
  c.eval_horizon = f.integer_or("eval_horizon", c.eval_horizon);
  if (c.horizon < 1) f.fail("horizon", "must be >= 1");
  if (c.burn_in < 0) f.fail("burn_in", "must be >= 0");
  if (c.eval_horizon < 1) f.fail("eval_horizon", "must be >= 1");

  // primal
  c.primal.iterations = static_cast<int>(f.integer_or("iterations", c.primal.iterations));
  if (c.primal.iterations < 1) f.fail("iterations", "must be >= 1");
  c.primal.step_size = f.real_or("step", c.primal.step_size);
  if (!(c.primal.step_size > 0.0)) f.fail("step", "must be positive");
  c.primal.fd_step = f.real_or("fd_step", c.env == EnvKind::EightQueue ? kSimulatedFdStep : kExactFdStep);
  if (!(c.primal.fd_step > 0.0)) f.fail("fd_step", "must be positive");
  if (f.has("schedule")) {
    const std::string s = f.text("schedule");
    if (s == "constant") c.primal.schedule = StepSchedule::Constant;
    else if (s == "inverse-sqrt") c.primal.schedule = StepSchedule::InverseSqrt;
    else f.fail("schedule", "expected constant or inverse-sqrt");
  }
  if (f.has("w0")) c.w0 = f.reals("w0");

  // dual
  c.sgd.num_rounds = f.integer_or("T", c.sgd.num_rounds);
  if (c.sgd.num_rounds < 1) f.fail("T", "must be >= 1");
  if (f.has("H")) {
    c.sgd.penalty = f.real("H");
    if (!(*c.sgd.penalty > 0.0)) f.fail("H", "must be positive");
  }
  if (f.has("eta")) {
    c.sgd.learning_rate = f.real("eta");
    if (!(*c.sgd.learning_rate > 0.0)) f.fail("eta", "must be positive");
  }
  c.sgd.radius = f.real_or("S", c.sgd.radius);
  if (!(c.sgd.radius > 0.0)) f.fail("S", "must be positive");
  c.sgd.record_every = f.integer_or("record_every", 0);
  if (c.sgd.record_every < 0) f.fail("record_every", "must be >= 0");
  c.sgd.batch = static_cast<int>(f.integer_or("batch", 1));
  if (c.sgd.batch < 1) f.fail("batch", "must be >= 1");
  c.sgd.confidence = f.real_or("delta", c.sgd.confidence);
  if (!(c.sgd.confidence > 0.0 && c.sgd.confidence < 1.0)) f.fail("delta", "must lie in (0, 1)");
  c.sgd.discount = c.gamma;
  if (f.has("tuning")) {
    const std::string t = f.text("tuning");
    if (t == "u-aware") c.u_aware = true;
    else if (t != "default") f.fail("tuning", "expected default or u-aware");
  }
  c.pilot_rounds = f.integer_or("pilot_rounds", 0);
  if (c.pilot_rounds < 0) f.fail("pilot_rounds", "must be >= 0");

  c.grid_resolution = f.real_or("resolution", c.method == Method::Hardness ? c.lattice_resolution : c.grid_resolution);
  if (!(c.grid_resolution > 0.0)) f.fail("resolution", "must be positive");
  c.lattice_resolution = c.grid_resolution;
  if (f.has("graph_file")) c.graph_file = resolve_path(base_dir, f.text("graph_file"));

  c.steps = static_cast<int>(f.integer_or("steps", c.steps));
  if (c.steps < 1) f.fail("steps", "must be >= 1");
  return c;
}

ExperimentConfig load_experiment(const std::string& path, std::optional<std::uint64_t> seed_override) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open file");
  const auto dir = std::filesystem::path(path).parent_path();
  return parse_experiment(in, path, dir.empty() ? "." : dir.string(), seed_override);
}

namespace {

void require_seed(const ExperimentConfig& c) {
  if (!c.seed_given) throw ConfigError(c.raw.source() + ": missing required key `seed` (or pass --seed)");
}

}  // namespace

void require_environment_keys(const ExperimentConfig& c) {
  c.raw.require({"env", "policies"}, "the environment");
  if (c.w0 && c.w0->size() != c.policies.size()) c.raw.fail("w0", "needs one weight per policy");
}

void require_method_keys(const ExperimentConfig& c) {
  if (c.method != Method::Hardness || c.raw.has("method")) c.raw.require({"method"}, "optimize");
  require_seed(c);
  const std::string why = std::string("method ") + to_string(c.method);
  switch (c.method) {
    case Method::PrimalFd:
      require_environment_keys(c);
      c.raw.require({"iterations", "step"}, why);
      break;
    case Method::DualSgd:
      require_environment_keys(c);
      c.raw.require({"T", "S"}, why);
      break;
    case Method::DualGrid:
      require_environment_keys(c);
      c.raw.require({"S", "resolution"}, why);
      break;
    case Method::Hardness:
      c.raw.require({"graph_file"}, why);
      break;
  }
}

void require_compare_keys(const ExperimentConfig& c) {
  require_seed(c);
  require_environment_keys(c);
  c.raw.require({"iterations", "step", "T", "S", "steps"}, "compare");
}

}  // namespace mixopt
