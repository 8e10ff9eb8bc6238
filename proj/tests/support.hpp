#pragma once

// Random instances and reference computations shared by the unit tests and
// the acceptance binary. The oracles here use plain loops (truncated series,
// fixed-point iteration) so they do not share code with the library solvers.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "mixopt/mdp.hpp"
#include "mixopt/rng.hpp"

namespace support {

using mixopt::Vec;

inline mixopt::Engine engine(std::uint64_t seed) { return mixopt::Engine(seed * 0x9E3779B97F4A7C15ULL + 7); }

inline Vec random_distribution(int n, mixopt::Engine& rng, double zero_prob = 0.0) {
  Vec p(n);
  double total = 0.0;
  while (total <= 0.0) {
    total = 0.0;
    for (int i = 0; i < n; ++i) {
      p[i] = mixopt::uniform01(rng) < zero_prob ? 0.0 : -std::log(1.0 - mixopt::uniform01(rng));
      total += p[i];
    }
  }
  for (double& v : p) v /= total;
  return p;
}

/// Dense random MDP; `zero_prob` sparsifies transition rows.
inline mixopt::TabularMdp random_mdp(int X, int A, double gamma, std::uint64_t seed, double zero_prob = 0.0) {
  mixopt::Engine rng = engine(seed);
  Vec trans;
  trans.reserve(static_cast<std::size_t>(X) * A * X);
  for (int s = 0; s < X * A; ++s) {
    const Vec row = random_distribution(X, rng, zero_prob);
    trans.insert(trans.end(), row.begin(), row.end());
  }
  Vec cost(static_cast<std::size_t>(X) * A);
  for (double& c : cost) c = mixopt::uniform01(rng);
  return {X, A, std::move(cost), trans, random_distribution(X, rng), gamma};
}

inline mixopt::StationaryPolicy random_policy(int X, int A, std::uint64_t seed, double zero_prob = 0.0) {
  mixopt::Engine rng = engine(seed ^ 0xABCDEFULL);
  Vec probs;
  for (int x = 0; x < X; ++x) {
    const Vec row = random_distribution(A, rng, zero_prob);
    probs.insert(probs.end(), row.begin(), row.end());
  }
  return {X, A, std::move(probs)};
}

/// P_pi as a dense X x X row-major matrix.
inline Vec dense_chain(const mixopt::TabularMdp& mdp, const mixopt::StationaryPolicy& pi) {
  const int X = mdp.num_states();
  Vec P(static_cast<std::size_t>(X) * X, 0.0);
  for (int x = 0; x < X; ++x)
    for (int a = 0; a < mdp.num_actions(); ++a)
      for (const auto& t : mdp.transitions(x, a)) P[static_cast<std::size_t>(x) * X + t.next] += pi(x, a) * t.prob;
  return P;
}

inline Vec policy_cost_vector(const mixopt::TabularMdp& mdp, const mixopt::StationaryPolicy& pi) {
  Vec c(mdp.num_states(), 0.0);
  for (int x = 0; x < mdp.num_states(); ++x)
    for (int a = 0; a < mdp.num_actions(); ++a) c[x] += pi(x, a) * mdp.cost(x, a);
  return c;
}

/// nu = (1 - gamma) sum_t gamma^t alpha^T P^t, truncated once gamma^t < 1e-17.
inline Vec series_state_occupancy(const mixopt::TabularMdp& mdp, const mixopt::StationaryPolicy& pi) {
  const int X = mdp.num_states();
  const Vec P = dense_chain(mdp, pi);
  const double g = mdp.discount();
  Vec term = mdp.initial();
  Vec nu(X, 0.0);
  double scale = 1.0 - g;
  while (scale > 1e-17) {
    for (int x = 0; x < X; ++x) nu[x] += scale * term[x];
    Vec next(X, 0.0);
    for (int x = 0; x < X; ++x)
      if (term[x] != 0.0)
        for (int y = 0; y < X; ++y) next[y] += term[x] * P[static_cast<std::size_t>(x) * X + y];
    term.swap(next);
    scale *= g;
  }
  return nu;
}

inline Vec series_state_action_occupancy(const mixopt::TabularMdp& mdp, const mixopt::StationaryPolicy& pi) {
  const Vec nu = series_state_occupancy(mdp, pi);
  Vec mu(mdp.num_pairs());
  for (int x = 0; x < mdp.num_states(); ++x)
    for (int a = 0; a < mdp.num_actions(); ++a) mu[mdp.index(x, a)] = nu[x] * pi(x, a);
  return mu;
}

/// (1 - gamma) alpha^T V with V = c_pi + gamma P_pi V by fixed-point iteration.
inline double value_iteration_cost(const mixopt::TabularMdp& mdp, const mixopt::StationaryPolicy& pi,
                                   double tol = 1e-13) {
  const int X = mdp.num_states();
  const Vec P = dense_chain(mdp, pi);
  const Vec c = policy_cost_vector(mdp, pi);
  const double g = mdp.discount();
  Vec V(X, 0.0);
  for (int it = 0; it < 1'000'000; ++it) {
    Vec next(X);
    double diff = 0.0;
    for (int x = 0; x < X; ++x) {
      double s = c[x];
      for (int y = 0; y < X; ++y) s += g * P[static_cast<std::size_t>(x) * X + y] * V[y];
      next[x] = s;
      diff = std::max(diff, std::abs(s - V[x]));
    }
    V.swap(next);
    if (diff * g / (1.0 - g) < tol) break;
  }
  double j = 0.0;
  for (int x = 0; x < X; ++x) j += mdp.initial()[x] * V[x];
  return (1.0 - g) * j;
}

/// Stationary distribution by power iteration on the lazy chain (I + P) / 2.
inline Vec power_stationary(const Vec& P, int X, double tol = 1e-15, int max_iter = 5'000'000) {
  Vec rho(X, 1.0 / X);
  for (int it = 0; it < max_iter; ++it) {
    Vec next(X, 0.0);
    for (int x = 0; x < X; ++x) {
      next[x] += 0.5 * rho[x];
      for (int y = 0; y < X; ++y) next[y] += 0.5 * rho[x] * P[static_cast<std::size_t>(x) * X + y];
    }
    double diff = 0.0;
    for (int x = 0; x < X; ++x) diff += std::abs(next[x] - rho[x]);
    rho.swap(next);
    if (diff < tol) break;
  }
  return rho;
}

inline double linf(const Vec& a, const Vec& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
  return d;
}

inline double l1(const Vec& a, const Vec& b) {
  double d = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d += std::abs(a[i] - b[i]);
  return d;
}

}  // namespace support
