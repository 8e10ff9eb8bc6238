#pragma once

#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include <Eigen/SparseCore>

#include "mixopt/common.hpp"
#include "mixopt/rng.hpp"

namespace mixopt {

struct Transition {
  int next;
  double prob;
};

/**
 * Finite discounted MDP <X, A, c, P, alpha, gamma>.
 *
 * Transitions are stored as one sparse row per state-action pair, indexed
 * row-major as x * A + a (the same flattening used for every state-action
 * vector in the library). Rows must be stochastic within 1e-12.
 */
class TabularMdp {
 public:
  /// Dense constructor: `transition` is X*A*X in (x, a, x') row-major order.
  TabularMdp(int num_states, int num_actions, Vec cost, const Vec& transition, Vec initial,
             double discount);

  /// Sparse constructor: rows[x * A + a] lists the successors of (x, a).
  TabularMdp(int num_states, int num_actions, Vec cost, std::vector<std::vector<Transition>> rows,
             Vec initial, double discount);

  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }
  std::size_t num_pairs() const { return static_cast<std::size_t>(num_states_) * num_actions_; }
  double discount() const { return discount_; }

  double cost(int x, int a) const { return cost_[index(x, a)]; }
  const Vec& costs() const { return cost_; }
  const Vec& initial() const { return initial_; }
  double cost_min() const;
  double cost_max() const;

  std::span<const Transition> transitions(int x, int a) const {
    const std::size_t r = index(x, a);
    return {entries_.data() + offsets_[r], entries_.data() + offsets_[r + 1]};
  }

  /// P(x' | x, a); linear scan of the sparse row.
  double probability(int x, int a, int next) const;

  std::size_t index(int x, int a) const { return static_cast<std::size_t>(x) * num_actions_ + a; }

 private:
  void build(std::vector<std::vector<Transition>> rows);
  void validate() const;

  int num_states_;
  int num_actions_;
  Vec cost_;
  std::vector<std::size_t> offsets_;
  std::vector<Transition> entries_;
  Vec initial_;
  double discount_;
};

/// Row-stochastic X x A table pi(a | x), stored row-major.
class StationaryPolicy {
 public:
  StationaryPolicy(int num_states, int num_actions, Vec probs);

  static StationaryPolicy uniform(int num_states, int num_actions);
  static StationaryPolicy deterministic(int num_actions, const std::vector<int>& actions);
  /// Same action distribution in every state.
  static StationaryPolicy state_independent(int num_states, const Vec& dist);

  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }
  double operator()(int x, int a) const { return probs_[static_cast<std::size_t>(x) * num_actions_ + a]; }
  std::span<const double> row(int x) const {
    return {probs_.data() + static_cast<std::size_t>(x) * num_actions_, static_cast<std::size_t>(num_actions_)};
  }
  const Vec& probs() const { return probs_; }

  int sample(int x, Engine& rng) const;

  bool operator==(const StationaryPolicy&) const = default;

 private:
  int num_states_;
  int num_actions_;
  Vec probs_;
};

/// State-action occupancy mu (flattened x * A + a) and its state marginal nu.
struct OccupancyMeasure {
  int num_states = 0;
  int num_actions = 0;
  Vec state_action;
  Vec state;

  double operator()(int x, int a) const {
    return state_action[static_cast<std::size_t>(x) * num_actions + a];
  }
  static OccupancyMeasure from_state_action(int num_states, int num_actions, Vec mu);
};

using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

struct InducedChain {
  SparseMatrix transition;  // P_pi, X x X
  Vec cost;                 // c_pi
};

void check_compatible(const TabularMdp& mdp, const StationaryPolicy& policy);

InducedChain induced_chain(const TabularMdp& mdp, const StationaryPolicy& policy);

/// Discounted occupancy: nu^T (I - gamma P_pi) = (1 - gamma) alpha^T, mu = nu * pi.
OccupancyMeasure exact_occupancy(const TabularMdp& mdp, const StationaryPolicy& policy);

/// Stationary state-action distribution rho(x) pi(a|x) of the induced chain.
OccupancyMeasure stationary_occupancy(const TabularMdp& mdp, const StationaryPolicy& policy);

OccupancyMeasure occupancy(const TabularMdp& mdp, const StationaryPolicy& policy, Criterion criterion);

/// J(pi) = mu^T c under the discounted, (1-gamma)-normalized criterion.
double policy_value(const TabularMdp& mdp, const StationaryPolicy& policy);

/// Long-run average cost per step, rho^T c_pi.
double average_cost_exact(const TabularMdp& mdp, const StationaryPolicy& policy);

double policy_cost(const TabularMdp& mdp, const StationaryPolicy& policy, Criterion criterion);

/// rho with rho^T P = rho^T and sum 1, from the augmented system whose last
/// equation is replaced by the normalization. Throws NumericalError when the
/// chain has more than one recurrent class (singular system) or the residual
/// exceeds 1e-8.
Vec stationary_distribution(const SparseMatrix& transition);

/// Solves nu^T (I - gamma P) = rhs^T.
Vec solve_discounted_left(const SparseMatrix& transition, double gamma, const Vec& rhs);

/// Categorical sampler over the state-action pairs of an occupancy measure.
class StateActionSampler {
 public:
  explicit StateActionSampler(const OccupancyMeasure& mu);
  StateActionSampler(std::span<const double> weights, int num_actions);

  /// Flattened index x * A + a.
  std::size_t sample_index(Engine& rng) const;
  std::pair<int, int> sample(Engine& rng) const;

 private:
  int num_actions_;
  Vec cumulative_;
};

inline std::pair<int, int> sample_state_action(const StateActionSampler& sampler, Engine& rng) {
  return sampler.sample(rng);
}

}  // namespace mixopt
