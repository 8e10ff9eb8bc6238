#include <algorithm>
#include <cmath>
#include <numeric>

#include "doctest.h"
#include "mixopt/envs.hpp"
#include "support.hpp"

using namespace mixopt;

namespace {

double prob_to(const std::vector<Event>& events, const QueueLengths& target) {
  double p = 0.0;
  for (const auto& e : events)
    if (e.next == target) p += e.prob;
  return p;
}

}  // namespace

TEST_CASE("single queue transitions and costs") {
  SingleQueueConfig cfg;
  cfg.capacity = 4;
  cfg.arrival_prob = 0.3;
  const auto mdp = single_queue_mdp(cfg);
  CHECK(mdp.num_states() == 5);
  CHECK(mdp.num_actions() == 4);
  CHECK(mdp.probability(0, 2, 1) == 0.3);
  CHECK(mdp.probability(0, 2, 0) == doctest::Approx(0.7));
  CHECK(mdp.probability(2, 3, 1) == 0.65);
  CHECK(mdp.probability(2, 3, 3) == 0.3);
  CHECK(mdp.probability(2, 3, 2) == doctest::Approx(0.05));
  CHECK(mdp.probability(4, 0, 3) == 0.1625);
  CHECK(mdp.probability(4, 0, 4) == doctest::Approx(0.8375));
  CHECK(mdp.cost(3, 1) == doctest::Approx(9.0 + 2500.0 * 0.325 * 0.325));
  CHECK(mdp.initial()[0] == 1.0);

  cfg.arrival_prob = 0.5;
  CHECK_THROWS_AS(single_queue_mdp(cfg), InvalidInput);
  cfg.arrival_prob = 0.3;
  cfg.capacity = 0;
  CHECK_THROWS_AS(single_queue_mdp(cfg), InvalidInput);
}

TEST_CASE("four-queue network layout") {
  const auto cfg = QueueNetworkConfig::four_queue();
  const auto fq = four_queue_mdp(cfg);
  CHECK(fq.mdp.num_states() == 10000);
  CHECK(fq.mdp.num_actions() == 9);
  CHECK(std::count(fq.legal.begin(), fq.legal.end(), true) == 9);
  CHECK(fq.legal[0b0000]);
  CHECK(fq.legal[0b0011]);        // q1 and q2 have different servers
  CHECK_FALSE(fq.legal[0b1001]);  // q1 and q4 share server 1
  CHECK_FALSE(fq.legal[0b0110]);  // q2 and q3 share server 2

  // every joint action is a legal service vector and distinct
  std::vector<int> seen;
  for (int a = 0; a < 9; ++a) {
    const auto v = action_vector(cfg, a);
    int bits = 0;
    for (int k = 0; k < 4; ++k) bits |= v[k] << k;
    CHECK(fq.legal[bits]);
    seen.push_back(bits);
    CHECK(action_index(cfg, server_choices(cfg, a)) == a);
  }
  std::sort(seen.begin(), seen.end());
  CHECK(std::adjacent_find(seen.begin(), seen.end()) == seen.end());
  CHECK(server_choices(cfg, 5) == std::vector<int>{1, 2});

  for (std::size_t x = 0; x < 10000; x += 37) CHECK(encode_state(cfg, decode_state(cfg, x)) == x);
  CHECK(encode_state(cfg, {1, 0, 0, 0}) == 1000);
  CHECK(encode_state(cfg, {0, 0, 0, 9}) == 9);
}

TEST_CASE("network events") {
  const auto cfg = QueueNetworkConfig::four_queue();
  SUBCASE("interior step") {
    const QueueLengths s{2, 1, 3, 0};
    const int a = action_index(cfg, {1, 2});  // server 1 -> q1, server 2 -> q3
    const auto ev = network_events(cfg, s, a);
    double total = 0.0;
    for (const auto& e : ev) total += e.prob;
    CHECK(total == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(prob_to(ev, {3, 1, 3, 0}) == doctest::Approx(0.08));
    CHECK(prob_to(ev, {2, 1, 4, 0}) == doctest::Approx(0.08));
    CHECK(prob_to(ev, {1, 2, 3, 0}) == doctest::Approx(0.12));
    CHECK(prob_to(ev, {2, 1, 2, 1}) == doctest::Approx(0.28));
    CHECK(prob_to(ev, s) == doctest::Approx(1 - 0.16 - 0.12 - 0.28));
  }
  SUBCASE("boundaries") {
    const QueueLengths s{9, 9, 0, 0};
    const auto ev = network_events(cfg, s, action_index(cfg, {1, 2}));
    // arrival to full q1 lost, transfer into full q2 blocked, serving empty q3 does nothing
    CHECK(prob_to(ev, s) == doctest::Approx(1 - 0.08));
    CHECK(prob_to(ev, {9, 9, 1, 0}) == doctest::Approx(0.08));
  }
  SUBCASE("tabular rows merge the events") {
    const auto mdp = queue_network_mdp(cfg);
    const QueueLengths s{9, 9, 0, 0};
    const std::size_t x = encode_state(cfg, s);
    CHECK(mdp.probability(static_cast<int>(x), action_index(cfg, {1, 2}), static_cast<int>(x)) ==
          doctest::Approx(0.92));
    CHECK(mdp.cost(static_cast<int>(x), 0) == 18.0);
  }
  SUBCASE("validation") {
    auto bad = cfg;
    bad.routing = {1, 0, 3, -1};
    CHECK_THROWS_AS(bad.validate(), InvalidInput);
    bad = cfg;
    bad.arrival_rates = {0.3, 0.0, 0.3, 0.0};
    CHECK_THROWS_AS(bad.validate(), InvalidInput);
    bad = cfg;
    bad.servers = {{0, 3}, {1, 2, 3}};
    CHECK_THROWS_AS(bad.validate(), InvalidInput);
  }
}

TEST_CASE("family policy") {
  const auto cfg = QueueNetworkConfig::eight_queue();
  SUBCASE("server cases") {
    CHECK(server_choice_distribution(cfg, 1, {0, 0, 0, 0, 0, 0, 0, 0}, 0.7) == Vec{1, 0, 0, 0});
    CHECK(server_choice_distribution(cfg, 1, {0, 2, 0, 0, 0, 0, 0, 0}, 0.7) == Vec{1.0 - 0.7, 0.7, 0, 0});
    const Vec three = server_choice_distribution(cfg, 1, {0, 2, 0, 0, 5, 1, 0, 0}, 0.7);
    CHECK(three[0] == 0.0);
    CHECK(three[2] == 0.7);
    CHECK(three[1] == doctest::Approx(0.15));
    CHECK(three[3] == doctest::Approx(0.15));
    // ties go to the lower queue index
    const Vec tie = server_choice_distribution(cfg, 0, {4, 0, 0, 4, 0, 0, 0, 0}, 0.9);
    CHECK(tie[1] == 0.9);
    CHECK(tie[2] == doctest::Approx(0.1));
  }
  SUBCASE("joint distribution is a product and sums to one") {
    Engine rng = support::engine(5);
    for (int trial = 0; trial < 200; ++trial) {
      QueueLengths s(8);
      for (int& v : s) v = uniform01(rng) < 0.4 ? 0 : 1 + uniform_index(rng, 6);
      const Vec params{uniform01(rng), uniform01(rng), uniform01(rng)};
      const Vec d = family_action_distribution(cfg, s, params);
      CHECK(std::accumulate(d.begin(), d.end(), 0.0) == doctest::Approx(1.0).epsilon(1e-14));
      for (int a = 0; a < cfg.num_actions(); ++a) {
        const auto ch = server_choices(cfg, a);
        double p = 1.0;
        for (int srv = 0; srv < 3; ++srv) p *= server_choice_distribution(cfg, srv, s, params[srv])[ch[srv]];
        CHECK(d[a] == doctest::Approx(p));
        // never serve an empty queue with positive probability
        const auto v = action_vector(cfg, a);
        for (int k = 0; k < 8; ++k)
          if (v[k] && s[k] == 0) CHECK(d[a] == 0.0);
      }
    }
  }
  SUBCASE("relabeling a server's queues permutes its choices") {
    Engine rng = support::engine(6);
    for (int trial = 0; trial < 200; ++trial) {
      QueueLengths s(8);
      for (int& v : s) v = uniform_index(rng, 4);
      // make lengths distinct within server 2 so the tie rule does not apply
      s[2] = 1, s[6] = 2, s[7] = 3;
      auto perm = cfg;
      perm.servers[2] = {7, 2, 6};
      const double p = uniform01(rng);
      const Vec d = server_choice_distribution(cfg, 2, s, p);
      const Vec e = server_choice_distribution(perm, 2, s, p);
      CHECK(d[0] == e[0]);
      CHECK(d[1] == e[2]);  // queue 2
      CHECK(d[2] == e[3]);  // queue 6
      CHECK(d[3] == e[1]);  // queue 7
    }
  }
  SUBCASE("tabular policy rows") {
    const auto small = QueueNetworkConfig::four_queue(2);
    const auto pi = family_policy(small, {0.8, 0.6});
    const QueueLengths s{1, 0, 2, 2};
    const int x = static_cast<int>(encode_state(small, s));
    // server 1 owns q1 (1) and q4 (2): longest q4 w.p. .8, q1 w.p. .2
    // server 2 owns q2 (0) and q3 (2): only q3, served w.p. .6, idle .4
    CHECK(pi(x, action_index(small, {2, 2})) == doctest::Approx(0.48));
    CHECK(pi(x, action_index(small, {1, 0})) == doctest::Approx(0.08));
    CHECK(pi(x, action_index(small, {0, 0})) == 0.0);
  }
}

TEST_CASE("network simulator") {
  const auto cfg = QueueNetworkConfig::eight_queue();
  const QueueNetworkSimulator sim(cfg);
  const QueueLengths s{3, 0, 255, 1, 0, 7, 0, 2};
  CHECK(sim.unpack(sim.pack(s)) == s);
  CHECK(sim.cost(sim.pack(s), 0) == 268.0);
  CHECK_THROWS_AS(sim.pack({256, 0, 0, 0, 0, 0, 0, 0}), NumericalError);
  CHECK(sim.num_actions() == 3 * 4 * 4);

  SUBCASE("rule samples follow the family distribution") {
    const Vec params{0.6, 0.5, 0.9};
    const auto rule = family_rule(cfg, params);
    const QueueLengths st{2, 1, 0, 4, 3, 0, 1, 1};
    const Vec d = family_action_distribution(cfg, st, params);
    Engine rng(9);
    Vec hits(d.size(), 0.0);
    const int n = 200000;
    for (int k = 0; k < n; ++k) hits[rule(sim.pack(st), rng)] += 1.0;
    for (std::size_t a = 0; a < d.size(); ++a) {
      const double se = std::sqrt(d[a] * (1 - d[a]) / n);
      CHECK(std::abs(hits[a] / n - d[a]) <= 4 * se + 1e-12);
    }
  }
  SUBCASE("simulated average cost matches the bounded tabular network") {
    // light load: the capacity-6 model and the unbounded simulator differ only on rare overflow
    const auto mdp = queue_network_mdp(QueueNetworkConfig::four_queue(6, 0.02));
    auto unb = QueueNetworkConfig::four_queue(0, 0.02);
    const QueueNetworkSimulator net(unb);
    const double exact = average_cost(mdp, family_policy(QueueNetworkConfig::four_queue(6, 0.02), {0.9, 0.9}));
    const auto est = average_cost(net, family_rule(unb, {0.9, 0.9}), 2'000'000, 3);
    CHECK(std::abs(est.mean - exact) <= std::max(4 * est.std_error, 0.01 * exact));
  }
}
