#pragma once

#include <cstdint>
#include <vector>

#include "mixopt/mdp.hpp"
#include "mixopt/simulator.hpp"

// Queueing benchmarks: a single controlled-rate queue and rate-driven queue
// networks embedded in discrete time by uniformization (at most one event
// per step).

namespace mixopt {

// ---------------------------------------------------------------------------
// Single queue

struct SingleQueueConfig {
  int capacity = 99;              // L; states 0..L
  double arrival_prob = 0.3;      // p
  Vec service_rates = {0.1625, 0.325, 0.4875, 0.65};
  double queue_cost = 1.0;        // c(x, a) = queue_cost x^2 + service_cost a^2
  double service_cost = 2500.0;
  double discount = 0.99;

  void validate() const;
};

/// Initial distribution is the empty queue.
TabularMdp single_queue_mdp(const SingleQueueConfig& config);

// ---------------------------------------------------------------------------
// Queue networks

/**
 * Queues are 0-indexed. Each server owns an ordered list of queues and serves
 * at most one of them per step. A served job moves to routing[q] or leaves
 * the system when routing[q] == -1.
 *
 * Boundary rules: arrivals to a full queue are lost; serving an empty queue
 * does nothing; a transfer into a full downstream queue is blocked (the job
 * stays put).
 */
struct QueueNetworkConfig {
  int num_queues = 0;
  int capacity = 0;  // per queue, 0 = unbounded
  Vec arrival_rates;
  Vec service_rates;
  std::vector<std::vector<int>> servers;
  std::vector<int> routing;

  bool bounded() const { return capacity > 0; }
  int num_actions() const;
  void validate() const;

  /// r1 = r2 = 0.12, r3 = r4 = 0.28, lambda = 0.08, L = 9; server 1 owns
  /// {q1, q4}, server 2 owns {q2, q3}; q1 -> q2 -> exit, q3 -> q4 -> exit.
  static QueueNetworkConfig four_queue(int capacity = 9, double arrival = 0.08);
  /// Two pipelines q1 -> q2 -> q3 and q4 -> ... -> q8; servers own {q1, q4},
  /// {q2, q5, q6}, {q3, q7, q8}. Rates are configurable placeholders.
  static QueueNetworkConfig eight_queue();
};

using QueueLengths = std::vector<int>;

/// Joint action a <-> per-server choices (0 idle, k serves the k-th owned queue),
/// mixed radix with server 0 most significant.
std::vector<int> server_choices(const QueueNetworkConfig& config, int action);
int action_index(const QueueNetworkConfig& config, const std::vector<int>& choices);
/// The {0,1}^Q service vector of a joint action.
std::vector<int> action_vector(const QueueNetworkConfig& config, int action);
/// legal[b] for every binary service vector b (bit q = queue q served):
/// true iff each server serves at most one of its queues.
std::vector<bool> legal_action_mask(const QueueNetworkConfig& config);

struct Event {
  double prob;
  QueueLengths next;
};

/// One uniformized step: arrivals (in queue order), then services (in server
/// order), then the self-loop remainder. Outcomes are not merged.
std::vector<Event> network_events(const QueueNetworkConfig& config, const QueueLengths& state, int action);

/// Mixed-radix state index over queue lengths, queue 0 most significant.
std::size_t encode_state(const QueueNetworkConfig& config, const QueueLengths& state);
QueueLengths decode_state(const QueueNetworkConfig& config, std::size_t index);

/// Tabular network MDP (bounded capacity). Cost is the total number of jobs.
TabularMdp queue_network_mdp(const QueueNetworkConfig& config, double discount = 0.99);

struct FourQueueMdp {
  TabularMdp mdp;
  std::vector<bool> legal;  // over the 16 binary service vectors
};

FourQueueMdp four_queue_mdp(const QueueNetworkConfig& config, double discount = 0.99);

/**
 * Per-server family rule: with no nonempty owned queue the server idles;
 * otherwise it serves the longest nonempty queue (ties to the lower queue
 * index) w.p. p, each other nonempty queue w.p. (1-p)/(n-1), and idles
 * w.p. 1-p when only one queue is nonempty.
 */
Vec server_choice_distribution(const QueueNetworkConfig& config, int server, const QueueLengths& state, double p);
Vec family_action_distribution(const QueueNetworkConfig& config, const QueueLengths& state, const Vec& params);

/// Family policy on the tabular network (one p per server).
StationaryPolicy family_policy(const QueueNetworkConfig& config, const Vec& params);
inline StationaryPolicy family_policy_4q(const QueueNetworkConfig& config, double p1, double p2) {
  return family_policy(config, {p1, p2});
}

/// Unbounded-state network simulator; state keys pack 8 bits per queue.
class QueueNetworkSimulator final : public ForwardSimulator {
 public:
  explicit QueueNetworkSimulator(QueueNetworkConfig config);
  int num_actions() const override { return config_.num_actions(); }
  StateKey initial(Engine& rng) const override;
  StateKey step(StateKey state, int action, Engine& rng) const override;
  double cost(StateKey state, int action) const override;

  const QueueNetworkConfig& config() const { return config_; }
  QueueLengths unpack(StateKey key) const;
  StateKey pack(const QueueLengths& state) const;

 private:
  QueueNetworkConfig config_;
};

ActionRule family_rule(const QueueNetworkConfig& config, const Vec& params);
inline ActionRule family_policy_8q(const QueueNetworkConfig& config, double p1, double p2, double p3) {
  return family_rule(config, {p1, p2, p3});
}

/// Simulated average cost from the empty system with batch-means error.
CostEstimate average_cost(const ForwardSimulator& sim, const ActionRule& rule, std::int64_t horizon,
                          std::uint64_t seed, int num_batches = 20);
/// Exact average cost of a tabular environment via its stationary distribution.
double average_cost(const TabularMdp& mdp, const StationaryPolicy& policy);

}  // namespace mixopt
