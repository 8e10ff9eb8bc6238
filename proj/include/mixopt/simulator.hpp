#pragma once

#include <cstdint>
#include <functional>
#include <unordered_map>
#include <vector>

#include "mixopt/mdp.hpp"
#include "mixopt/rng.hpp"

namespace mixopt {

/// Opaque state key. Tabular simulators use the state index; network
/// simulators pack queue lengths into the key.
using StateKey = std::uint64_t;

/// Forward (generative) model: we can only start, act and observe.
class ForwardSimulator {
 public:
  virtual ~ForwardSimulator() = default;
  virtual int num_actions() const = 0;
  virtual StateKey initial(Engine& rng) const = 0;
  virtual StateKey step(StateKey state, int action, Engine& rng) const = 0;
  virtual double cost(StateKey state, int action) const = 0;
};

/// Samples an action for a state; must only consume randomness from `rng`.
using ActionRule = std::function<int(StateKey, Engine&)>;

ActionRule rule_from_policy(const StationaryPolicy& policy);

class TabularSimulator final : public ForwardSimulator {
 public:
  explicit TabularSimulator(const TabularMdp& mdp) : mdp_(mdp) {}
  int num_actions() const override { return mdp_.num_actions(); }
  StateKey initial(Engine& rng) const override;
  StateKey step(StateKey state, int action, Engine& rng) const override;
  double cost(StateKey state, int action) const override {
    return mdp_.cost(static_cast<int>(state), action);
  }
  const TabularMdp& mdp() const { return mdp_; }

 private:
  const TabularMdp& mdp_;
};

/**
 * Empirical state-action visit frequencies over the states a simulator
 * actually reached. Rows follow the order in which states were first seen.
 */
struct VisitTable {
  int num_actions = 0;
  std::vector<StateKey> states;
  std::unordered_map<StateKey, std::size_t> row_of;
  std::vector<std::uint64_t> counts;  // rows x num_actions

  void add(StateKey s, int a, std::uint64_t n = 1);
  std::uint64_t total() const;
  /// Merges `other` into this table; counts add, so merge order only changes row order.
  void merge(const VisitTable& other);
};

struct RolloutOptions {
  int num_episodes = 1000;
  std::uint64_t seed = 0;
  double discount = 0.9;
  int num_workers = 1;  // result is independent of this
};

/**
 * Discounted occupancy from roll-outs: each episode starts at x0 ~ alpha,
 * runs for a geometric number of steps (stop w.p. 1 - gamma after each
 * step, so at least one pair is recorded), and every visited pair is
 * counted. Episode e draws from its own derived stream.
 */
VisitTable rollout_visits(const ForwardSimulator& sim, const ActionRule& rule, const RolloutOptions& opts);

/// Tabular form of `rollout_visits`, normalized to a distribution.
OccupancyMeasure estimate_occupancy(const TabularMdp& mdp, const ActionRule& rule, int num_episodes,
                                    std::uint64_t seed, int num_workers = 1);
OccupancyMeasure estimate_occupancy(const TabularMdp& mdp, const StationaryPolicy& policy,
                                    int num_episodes, std::uint64_t seed, int num_workers = 1);

/// Long-run visit frequencies along one trajectory after `burn_in` steps.
VisitTable trajectory_visits(const ForwardSimulator& sim, const ActionRule& rule, std::int64_t horizon,
                             std::int64_t burn_in, std::uint64_t seed);

struct CostEstimate {
  double mean = 0.0;
  double std_error = 0.0;
};

/// Average per-step cost along one trajectory from the simulator's initial
/// state; standard error from `num_batches` batch means.
CostEstimate simulate_average_cost(const ForwardSimulator& sim, const ActionRule& rule,
                                   std::int64_t horizon, std::uint64_t seed, int num_batches = 20);

}  // namespace mixopt
