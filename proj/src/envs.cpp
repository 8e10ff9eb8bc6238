#include "mixopt/envs.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

namespace mixopt {

// ---------------------------------------------------------------------------
// Single queue

void SingleQueueConfig::validate() const {
  if (capacity < 1) throw InvalidInput("single queue: capacity must be >= 1");
  if (!(arrival_prob > 0.0 && arrival_prob < 1.0)) throw InvalidInput("single queue: arrival probability must lie in (0, 1)");
  if (service_rates.empty()) throw InvalidInput("single queue: need at least one service rate");
  for (double a : service_rates)
    if (!(a >= 0.0 && a <= 1.0)) throw InvalidInput("single queue: service rates must lie in [0, 1]");
  const double top = *std::max_element(service_rates.begin(), service_rates.end());
  if (arrival_prob + top > 1.0 + kProbTol) throw InvalidInput("single queue: p + max service rate exceeds 1");
}

TabularMdp single_queue_mdp(const SingleQueueConfig& config) {
  config.validate();
  const int n = config.capacity + 1;
  const int na = static_cast<int>(config.service_rates.size());
  const double p = config.arrival_prob;
  std::vector<std::vector<Transition>> rows(static_cast<std::size_t>(n) * na);
  Vec cost(rows.size());
  for (int x = 0; x < n; ++x)
    for (int k = 0; k < na; ++k) {
      const double a = config.service_rates[k];
      auto& row = rows[static_cast<std::size_t>(x) * na + k];
      if (x == 0) {
        row = {{1, p}, {0, 1.0 - p}};
      } else if (x == config.capacity) {
        row = {{x - 1, a}, {x, 1.0 - a}};
      } else {
        row = {{x - 1, a}, {x + 1, p}, {x, 1.0 - a - p}};
      }
      cost[static_cast<std::size_t>(x) * na + k] = config.queue_cost * x * x + config.service_cost * a * a;
    }
  Vec alpha(n, 0.0);
  alpha[0] = 1.0;
  return {n, na, std::move(cost), std::move(rows), std::move(alpha), config.discount};
}

// ---------------------------------------------------------------------------
// Network configuration

int QueueNetworkConfig::num_actions() const {
  int n = 1;
  for (const auto& s : servers) n *= static_cast<int>(s.size()) + 1;
  return n;
}

void QueueNetworkConfig::validate() const {
  if (num_queues < 1) throw InvalidInput("queue network: need at least one queue");
  if (num_queues > 8) throw InvalidInput("queue network: at most 8 queues are supported");
  if (capacity < 0) throw InvalidInput("queue network: capacity must be >= 0");
  const auto q = static_cast<std::size_t>(num_queues);
  if (arrival_rates.size() != q || service_rates.size() != q || routing.size() != q)
    throw InvalidInput("queue network: arrival, service and routing lists need one entry per queue");
  if (servers.empty()) throw InvalidInput("queue network: need at least one server");
  double total = 0.0;
  for (double l : arrival_rates) {
    if (!(l >= 0.0 && l <= 1.0)) throw InvalidInput("queue network: arrival rates must lie in [0, 1]");
    total += l;
  }
  for (double r : service_rates)
    if (!(r >= 0.0 && r <= 1.0)) throw InvalidInput("queue network: service rates must lie in [0, 1]");
  std::vector<int> owner(q, -1);
  for (std::size_t s = 0; s < servers.size(); ++s) {
    if (servers[s].empty()) throw InvalidInput("queue network: server " + std::to_string(s + 1) + " owns no queue");
    double top = 0.0;
    for (int k : servers[s]) {
      if (k < 0 || k >= num_queues) throw InvalidInput("queue network: server queue index out of range");
      if (owner[k] >= 0) throw InvalidInput("queue network: queue " + std::to_string(k + 1) + " has two servers");
      owner[k] = static_cast<int>(s);
      top = std::max(top, service_rates[k]);
    }
    total += top;
  }
  if (total > 1.0 + kProbTol) throw InvalidInput("queue network: event rates sum to more than 1");
  for (int k = 0; k < num_queues; ++k) {
    int cur = k;
    for (int hops = 0; cur != -1; ++hops) {
      if (hops > num_queues) throw InvalidInput("queue network: routing has a cycle");
      const int next = routing[cur];
      if (next < -1 || next >= num_queues) throw InvalidInput("queue network: routing target out of range");
      cur = next;
    }
  }
}

QueueNetworkConfig QueueNetworkConfig::four_queue(int capacity, double arrival) {
  QueueNetworkConfig c;
  c.num_queues = 4;
  c.capacity = capacity;
  c.arrival_rates = {arrival, 0.0, arrival, 0.0};
  c.service_rates = {0.12, 0.12, 0.28, 0.28};
  c.servers = {{0, 3}, {1, 2}};
  c.routing = {1, -1, 3, -1};
  return c;
}

QueueNetworkConfig QueueNetworkConfig::eight_queue() {
  QueueNetworkConfig c;
  c.num_queues = 8;
  c.capacity = 0;
  c.arrival_rates = {0.035, 0.0, 0.0, 0.035, 0.0, 0.0, 0.0, 0.0};
  c.service_rates = Vec(8, 0.3);
  c.servers = {{0, 3}, {1, 4, 5}, {2, 6, 7}};
  c.routing = {1, 2, -1, 4, 5, 6, 7, -1};
  return c;
}

std::vector<int> server_choices(const QueueNetworkConfig& config, int action) {
  if (action < 0 || action >= config.num_actions()) throw InvalidInput("server_choices: action out of range");
  std::vector<int> choices(config.servers.size());
  for (std::size_t s = config.servers.size(); s-- > 0;) {
    const int radix = static_cast<int>(config.servers[s].size()) + 1;
    choices[s] = action % radix;
    action /= radix;
  }
  return choices;
}

int action_index(const QueueNetworkConfig& config, const std::vector<int>& choices) {
  if (choices.size() != config.servers.size()) throw InvalidInput("action_index: one choice per server expected");
  int a = 0;
  for (std::size_t s = 0; s < choices.size(); ++s) {
    const int radix = static_cast<int>(config.servers[s].size()) + 1;
    if (choices[s] < 0 || choices[s] >= radix) throw InvalidInput("action_index: choice out of range");
    a = a * radix + choices[s];
  }
  return a;
}

std::vector<int> action_vector(const QueueNetworkConfig& config, int action) {
  std::vector<int> served(config.num_queues, 0);
  const auto choices = server_choices(config, action);
  for (std::size_t s = 0; s < choices.size(); ++s)
    if (choices[s] > 0) served[config.servers[s][choices[s] - 1]] = 1;
  return served;
}

std::vector<bool> legal_action_mask(const QueueNetworkConfig& config) {
  const int q = config.num_queues;
  std::vector<int> owner(q, -1);
  for (std::size_t s = 0; s < config.servers.size(); ++s)
    for (int k : config.servers[s]) owner[k] = static_cast<int>(s);
  std::vector<bool> legal(std::size_t{1} << q);
  for (std::size_t bits = 0; bits < legal.size(); ++bits) {
    std::vector<int> load(config.servers.size(), 0);
    bool ok = true;
    for (int k = 0; k < q && ok; ++k) {
      if (!(bits >> k & 1U)) continue;
      if (owner[k] < 0 || ++load[owner[k]] > 1) ok = false;
    }
    legal[bits] = ok;
  }
  return legal;
}

std::vector<Event> network_events(const QueueNetworkConfig& config, const QueueLengths& state, int action) {
  const auto choices = server_choices(config, action);
  std::vector<Event> events;
  double used = 0.0;
  auto full = [&](int k) { return config.bounded() && state[k] >= config.capacity; };
  for (int k = 0; k < config.num_queues; ++k) {
    const double rate = config.arrival_rates[k];
    if (rate <= 0.0) continue;
    used += rate;
    QueueLengths next = state;
    if (!full(k)) ++next[k];
    events.push_back({rate, std::move(next)});
  }
  for (std::size_t s = 0; s < choices.size(); ++s) {
    if (choices[s] == 0) continue;
    const int k = config.servers[s][choices[s] - 1];
    const double rate = config.service_rates[k];
    if (rate <= 0.0) continue;
    used += rate;
    QueueLengths next = state;
    const int to = config.routing[k];
    if (next[k] > 0 && (to < 0 || !full(to))) {
      --next[k];
      if (to >= 0) ++next[to];
    }
    events.push_back({rate, std::move(next)});
  }
  if (used < 1.0) events.push_back({1.0 - used, state});
  return events;
}

std::size_t encode_state(const QueueNetworkConfig& config, const QueueLengths& state) {
  if (!config.bounded()) throw InvalidInput("encode_state: unbounded network has no finite enumeration");
  std::size_t idx = 0;
  for (int k = 0; k < config.num_queues; ++k) {
    if (state[k] < 0 || state[k] > config.capacity) throw InvalidInput("encode_state: queue length out of range");
    idx = idx * (config.capacity + 1) + state[k];
  }
  return idx;
}

QueueLengths decode_state(const QueueNetworkConfig& config, std::size_t index) {
  QueueLengths s(config.num_queues);
  for (int k = config.num_queues; k-- > 0;) {
    s[k] = static_cast<int>(index % (config.capacity + 1));
    index /= config.capacity + 1;
  }
  return s;
}

namespace {

std::size_t num_network_states(const QueueNetworkConfig& config) {
  std::size_t n = 1;
  for (int k = 0; k < config.num_queues; ++k) n *= config.capacity + 1;
  return n;
}

}  // namespace

TabularMdp queue_network_mdp(const QueueNetworkConfig& config, double discount) {
  config.validate();
  if (!config.bounded()) throw InvalidInput("queue_network_mdp: tabular networks need a finite capacity");
  const std::size_t n = num_network_states(config);
  if (n > 2'000'000) throw InvalidInput("queue_network_mdp: state space too large");
  const int na = config.num_actions();
  std::vector<std::vector<Transition>> rows(n * na);
  Vec cost(n * na);
  for (std::size_t x = 0; x < n; ++x) {
    const QueueLengths state = decode_state(config, x);
    double jobs = 0.0;
    for (int v : state) jobs += v;
    for (int a = 0; a < na; ++a) {
      std::map<std::size_t, double> merged;
      for (const Event& e : network_events(config, state, a)) merged[encode_state(config, e.next)] += e.prob;
      auto& row = rows[x * na + a];
      for (auto [next, prob] : merged) row.push_back({static_cast<int>(next), prob});
      cost[x * na + a] = jobs;
    }
  }
  Vec alpha(n, 0.0);
  alpha[0] = 1.0;  // empty system
  return {static_cast<int>(n), na, std::move(cost), std::move(rows), std::move(alpha), discount};
}

FourQueueMdp four_queue_mdp(const QueueNetworkConfig& config, double discount) {
  if (config.num_queues != 4 || config.servers.size() != 2)
    throw InvalidInput("four_queue_mdp: expected four queues and two servers");
  return {queue_network_mdp(config, discount), legal_action_mask(config)};
}

// ---------------------------------------------------------------------------
// Policy family

Vec server_choice_distribution(const QueueNetworkConfig& config, int server, const QueueLengths& state, double p) {
  if (!(p >= 0.0 && p <= 1.0)) throw InvalidInput("family policy: p must lie in [0, 1]");
  const auto& owned = config.servers.at(server);
  Vec dist(owned.size() + 1, 0.0);
  int longest = -1;
  int nonempty = 0;
  for (std::size_t j = 0; j < owned.size(); ++j) {
    const int len = state[owned[j]];
    if (len == 0) continue;
    ++nonempty;
    if (longest < 0 || len > state[owned[longest]] ||
        (len == state[owned[longest]] && owned[j] < owned[longest]))
      longest = static_cast<int>(j);
  }
  if (nonempty == 0) {
    dist[0] = 1.0;
    return dist;
  }
  dist[longest + 1] = p;
  if (nonempty == 1) {
    dist[0] = 1.0 - p;
    return dist;
  }
  const double rest = (1.0 - p) / (nonempty - 1);
  for (std::size_t j = 0; j < owned.size(); ++j)
    if (static_cast<int>(j) != longest && state[owned[j]] > 0) dist[j + 1] = rest;
  return dist;
}

Vec family_action_distribution(const QueueNetworkConfig& config, const QueueLengths& state, const Vec& params) {
  if (params.size() != config.servers.size()) throw InvalidInput("family policy: one parameter per server expected");
  std::vector<Vec> per_server;
  for (std::size_t s = 0; s < config.servers.size(); ++s)
    per_server.push_back(server_choice_distribution(config, static_cast<int>(s), state, params[s]));
  const int na = config.num_actions();
  Vec dist(na);
  for (int a = 0; a < na; ++a) {
    const auto choices = server_choices(config, a);
    double p = 1.0;
    for (std::size_t s = 0; s < choices.size(); ++s) p *= per_server[s][choices[s]];
    dist[a] = p;
  }
  return dist;
}

StationaryPolicy family_policy(const QueueNetworkConfig& config, const Vec& params) {
  config.validate();
  const std::size_t n = num_network_states(config);
  const int na = config.num_actions();
  Vec probs;
  probs.reserve(n * na);
  for (std::size_t x = 0; x < n; ++x) {
    const Vec row = family_action_distribution(config, decode_state(config, x), params);
    probs.insert(probs.end(), row.begin(), row.end());
  }
  return {static_cast<int>(n), na, std::move(probs)};
}

// ---------------------------------------------------------------------------
// Simulator

QueueNetworkSimulator::QueueNetworkSimulator(QueueNetworkConfig config) : config_(std::move(config)) {
  config_.validate();
}

QueueLengths QueueNetworkSimulator::unpack(StateKey key) const {
  QueueLengths s(config_.num_queues);
  for (int k = 0; k < config_.num_queues; ++k) s[k] = static_cast<int>(key >> (8 * k) & 0xFF);
  return s;
}

StateKey QueueNetworkSimulator::pack(const QueueLengths& state) const {
  StateKey key = 0;
  for (int k = 0; k < config_.num_queues; ++k) {
    if (state[k] > 255) throw NumericalError("queue simulator: queue " + std::to_string(k + 1) + " exceeded 255 jobs");
    key |= static_cast<StateKey>(state[k]) << (8 * k);
  }
  return key;
}

StateKey QueueNetworkSimulator::initial(Engine&) const { return 0; }

StateKey QueueNetworkSimulator::step(StateKey state, int action, Engine& rng) const {
  const auto events = network_events(config_, unpack(state), action);
  const double u = uniform01(rng);
  double acc = 0.0;
  for (const Event& e : events) {
    acc += e.prob;
    if (u < acc) return pack(e.next);
  }
  return pack(events.back().next);
}

double QueueNetworkSimulator::cost(StateKey state, int) const {
  double jobs = 0.0;
  for (int k = 0; k < config_.num_queues; ++k) jobs += static_cast<double>(state >> (8 * k) & 0xFF);
  return jobs;
}

ActionRule family_rule(const QueueNetworkConfig& config, const Vec& params) {
  config.validate();
  if (params.size() != config.servers.size()) throw InvalidInput("family rule: one parameter per server expected");
  for (double p : params)
    if (!(p >= 0.0 && p <= 1.0)) throw InvalidInput("family rule: p must lie in [0, 1]");
  return [config, params](StateKey key, Engine& rng) {
    QueueLengths state(config.num_queues);
    for (int k = 0; k < config.num_queues; ++k) state[k] = static_cast<int>(key >> (8 * k) & 0xFF);
    std::vector<int> choices(config.servers.size());
    for (std::size_t s = 0; s < choices.size(); ++s) {
      const Vec dist = server_choice_distribution(config, static_cast<int>(s), state, params[s]);
      const double u = uniform01(rng);
      double acc = 0.0;
      int pick = 0;
      for (std::size_t j = 0; j < dist.size(); ++j) {
        if (dist[j] <= 0.0) continue;
        acc += dist[j];
        pick = static_cast<int>(j);
        if (u < acc) break;
      }
      choices[s] = pick;
    }
    return action_index(config, choices);
  };
}

CostEstimate average_cost(const ForwardSimulator& sim, const ActionRule& rule, std::int64_t horizon,
                          std::uint64_t seed, int num_batches) {
  return simulate_average_cost(sim, rule, horizon, seed, num_batches);
}

double average_cost(const TabularMdp& mdp, const StationaryPolicy& policy) { return average_cost_exact(mdp, policy); }

}  // namespace mixopt
