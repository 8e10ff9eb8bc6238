#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mixopt/dual.hpp"
#include "mixopt/envs.hpp"
#include "mixopt/mixture.hpp"

namespace mixopt {

/// Config problem; the message is prefixed with `<source>:<line>:` when a
/// line is known.
class ConfigError : public InvalidInput {
 public:
  using InvalidInput::InvalidInput;
};

struct ConfigValue {
  std::string text;
  int line = 0;
};

/**
 * `key = value` lines; `#` starts a comment, blank lines are ignored.
 * Keys outside `allowed` and repeated keys are rejected.
 */
class KeyValueFile {
 public:
  static KeyValueFile parse(std::istream& in, const std::string& source, const std::set<std::string>& allowed);
  static KeyValueFile load(const std::string& path, const std::set<std::string>& allowed);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  const std::string& source() const { return source_; }

  std::string text(const std::string& key) const;
  double real(const std::string& key) const;
  std::int64_t integer(const std::string& key) const;
  /// Comma-separated reals.
  Vec reals(const std::string& key) const;
  /// Semicolon-separated groups of comma-separated reals.
  std::vector<Vec> groups(const std::string& key) const;
  std::vector<std::vector<int>> int_groups(const std::string& key) const;

  std::string text_or(const std::string& key, const std::string& fallback) const;
  double real_or(const std::string& key, double fallback) const;
  std::int64_t integer_or(const std::string& key, std::int64_t fallback) const;

  [[noreturn]] void fail(const std::string& key, const std::string& what) const;
  void require(const std::vector<std::string>& keys, const std::string& why) const;

 private:
  const ConfigValue& at(const std::string& key) const;

  std::string source_;
  std::map<std::string, ConfigValue> values_;
};

enum class EnvKind { SingleQueue, FourQueue, EightQueue };
enum class Method { PrimalFd, DualSgd, DualGrid, Hardness };

const char* to_string(EnvKind e);
const char* to_string(Method m);

struct ExperimentConfig {
  KeyValueFile raw;
  Method method = Method::DualSgd;
  std::uint64_t seed = 0;
  bool seed_given = false;

  // environment
  EnvKind env = EnvKind::SingleQueue;
  SingleQueueConfig single;
  QueueNetworkConfig network;
  Criterion criterion = Criterion::Average;
  double gamma = 0.99;
  /// One parameter vector per base policy: an action distribution for the
  /// single queue, per-server p values for networks.
  std::vector<Vec> policies;

  // occupancy estimation for simulator environments
  std::int64_t horizon = 1'000'000;
  std::int64_t burn_in = 10'000;
  std::int64_t eval_horizon = 1'000'000;

  // primal-fd
  PrimalDescentOptions primal;
  std::optional<Vec> w0;

  // dual-sgd
  SgdRun sgd;
  bool u_aware = false;
  std::int64_t pilot_rounds = 0;  // 0 -> T / 10

  // dual-grid
  double grid_resolution = 0.05;

  // hardness
  std::string graph_file;
  double lattice_resolution = 0.02;

  // compare
  int steps = 50;
};

/// Keys accepted by the experiment config.
const std::set<std::string>& experiment_keys();
/// Keys accepted by an `env_file`.
const std::set<std::string>& environment_keys();

/// `base_dir` resolves a relative `env_file` / `graph_file`. A `seed_override`
/// stands in for a missing `seed` key.
ExperimentConfig parse_experiment(std::istream& in, const std::string& source, const std::string& base_dir = ".",
                                  std::optional<std::uint64_t> seed_override = std::nullopt);
ExperimentConfig load_experiment(const std::string& path,
                                 std::optional<std::uint64_t> seed_override = std::nullopt);

/// Keys the configured `method` needs.
void require_method_keys(const ExperimentConfig& config);
/// Keys needed by `compare` (primal and dual settings plus `steps`).
void require_compare_keys(const ExperimentConfig& config);
/// Keys needed to build the environment and base policies.
void require_environment_keys(const ExperimentConfig& config);

}  // namespace mixopt
