#include "mixopt/simulator.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

namespace mixopt {

ActionRule rule_from_policy(const StationaryPolicy& policy) {
  return [policy](StateKey s, Engine& rng) { return policy.sample(static_cast<int>(s), rng); };
}

StateKey TabularSimulator::initial(Engine& rng) const {
  const double u = uniform01(rng);
  double acc = 0.0;
  int last = 0;
  for (int x = 0; x < mdp_.num_states(); ++x) {
    const double p = mdp_.initial()[x];
    if (p <= 0.0) continue;
    acc += p;
    last = x;
    if (u < acc) return static_cast<StateKey>(x);
  }
  return static_cast<StateKey>(last);
}

StateKey TabularSimulator::step(StateKey state, int action, Engine& rng) const {
  const double u = uniform01(rng);
  double acc = 0.0;
  int last = static_cast<int>(state);
  for (const Transition& t : mdp_.transitions(static_cast<int>(state), action)) {
    if (t.prob <= 0.0) continue;
    acc += t.prob;
    last = t.next;
    if (u < acc) return static_cast<StateKey>(t.next);
  }
  return static_cast<StateKey>(last);
}

void VisitTable::add(StateKey s, int a, std::uint64_t n) {
  auto [it, inserted] = row_of.try_emplace(s, states.size());
  if (inserted) {
    states.push_back(s);
    counts.resize(counts.size() + num_actions, 0);
  }
  counts[it->second * num_actions + a] += n;
}

std::uint64_t VisitTable::total() const {
  std::uint64_t t = 0;
  for (auto c : counts) t += c;
  return t;
}

void VisitTable::merge(const VisitTable& other) {
  if (other.num_actions != num_actions) throw InvalidInput("VisitTable::merge: action count mismatch");
  for (std::size_t r = 0; r < other.states.size(); ++r)
    for (int a = 0; a < num_actions; ++a) {
      const auto c = other.counts[r * num_actions + a];
      if (c != 0) add(other.states[r], a, c);
    }
}

namespace {

void run_episodes(const ForwardSimulator& sim, const ActionRule& rule, const RolloutOptions& opts,
                  int first, int last, VisitTable& out) {
  for (int e = first; e < last; ++e) {
    Engine rng = make_stream(opts.seed, "rollout", static_cast<std::uint64_t>(e));
    StateKey s = sim.initial(rng);
    while (true) {
      const int a = rule(s, rng);
      out.add(s, a);
      if (uniform01(rng) >= opts.discount) break;
      s = sim.step(s, a, rng);
    }
  }
}

}  // namespace

VisitTable rollout_visits(const ForwardSimulator& sim, const ActionRule& rule, const RolloutOptions& opts) {
  if (opts.num_episodes < 1) throw InvalidInput("rollout_visits: need at least one episode");
  if (!(opts.discount > 0.0 && opts.discount < 1.0)) throw InvalidInput("rollout_visits: discount must lie in (0, 1)");
  const int workers = std::clamp(opts.num_workers, 1, opts.num_episodes);
  std::vector<VisitTable> parts(workers);
  for (auto& p : parts) p.num_actions = sim.num_actions();
  const int chunk = (opts.num_episodes + workers - 1) / workers;
  if (workers == 1) {
    run_episodes(sim, rule, opts, 0, opts.num_episodes, parts[0]);
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) {
      const int first = w * chunk;
      const int last = std::min(opts.num_episodes, first + chunk);
      pool.emplace_back([&, w, first, last] { run_episodes(sim, rule, opts, first, last, parts[w]); });
    }
    for (auto& t : pool) t.join();
  }
  VisitTable merged = std::move(parts[0]);
  for (int w = 1; w < workers; ++w) merged.merge(parts[w]);
  return merged;
}

OccupancyMeasure estimate_occupancy(const TabularMdp& mdp, const ActionRule& rule, int num_episodes,
                                    std::uint64_t seed, int num_workers) {
  TabularSimulator sim(mdp);
  const VisitTable visits = rollout_visits(sim, rule, {num_episodes, seed, mdp.discount(), num_workers});
  Vec mu(mdp.num_pairs(), 0.0);
  const double total = static_cast<double>(visits.total());
  for (std::size_t r = 0; r < visits.states.size(); ++r)
    for (int a = 0; a < mdp.num_actions(); ++a)
      mu[mdp.index(static_cast<int>(visits.states[r]), a)] =
          static_cast<double>(visits.counts[r * mdp.num_actions() + a]) / total;
  return OccupancyMeasure::from_state_action(mdp.num_states(), mdp.num_actions(), std::move(mu));
}

OccupancyMeasure estimate_occupancy(const TabularMdp& mdp, const StationaryPolicy& policy, int num_episodes,
                                    std::uint64_t seed, int num_workers) {
  check_compatible(mdp, policy);
  return estimate_occupancy(mdp, rule_from_policy(policy), num_episodes, seed, num_workers);
}

VisitTable trajectory_visits(const ForwardSimulator& sim, const ActionRule& rule, std::int64_t horizon,
                             std::int64_t burn_in, std::uint64_t seed) {
  if (horizon < 1 || burn_in < 0) throw InvalidInput("trajectory_visits: bad horizon");
  VisitTable out;
  out.num_actions = sim.num_actions();
  Engine rng = make_stream(seed, "trajectory");
  StateKey s = sim.initial(rng);
  for (std::int64_t t = 0; t < burn_in + horizon; ++t) {
    const int a = rule(s, rng);
    if (t >= burn_in) out.add(s, a);
    s = sim.step(s, a, rng);
  }
  return out;
}

CostEstimate simulate_average_cost(const ForwardSimulator& sim, const ActionRule& rule, std::int64_t horizon,
                                   std::uint64_t seed, int num_batches) {
  if (horizon < 1) throw InvalidInput("simulate_average_cost: horizon must be >= 1");
  num_batches = static_cast<int>(std::clamp<std::int64_t>(num_batches, 1, horizon));
  Engine rng = make_stream(seed, "average-cost");
  StateKey s = sim.initial(rng);
  Vec batch_sums(num_batches, 0.0);
  std::vector<std::int64_t> batch_len(num_batches, 0);
  double total = 0.0;
  for (std::int64_t t = 0; t < horizon; ++t) {
    const int a = rule(s, rng);
    const double c = sim.cost(s, a);
    total += c;
    const auto b = static_cast<std::size_t>(t * num_batches / horizon);
    batch_sums[b] += c;
    ++batch_len[b];
    s = sim.step(s, a, rng);
  }
  CostEstimate est;
  est.mean = total / static_cast<double>(horizon);
  if (num_batches > 1) {
    double ss = 0.0;
    for (int b = 0; b < num_batches; ++b) {
      const double m = batch_sums[b] / static_cast<double>(batch_len[b]);
      ss += (m - est.mean) * (m - est.mean);
    }
    est.std_error = std::sqrt(ss / (num_batches - 1) / num_batches);
  }
  return est;
}

}  // namespace mixopt
