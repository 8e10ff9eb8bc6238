#include "mixopt/mdp.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include <Eigen/Dense>
#include <Eigen/SparseLU>

namespace mixopt {

namespace {

// Chains up to this size are solved with a dense direct factorization.
constexpr int kDenseLimit = 512;

void check_distribution(std::span<const double> p, const std::string& what) {
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0)) throw InvalidInput(what + ": negative or NaN entry");
    sum += v;
  }
  if (std::abs(sum - 1.0) > kProbTol) throw InvalidInput(what + ": does not sum to 1");
}

}  // namespace

// ---------------------------------------------------------------------------
// TabularMdp

TabularMdp::TabularMdp(int num_states, int num_actions, Vec cost, const Vec& transition, Vec initial,
                       double discount)
    : num_states_(num_states), num_actions_(num_actions), cost_(std::move(cost)),
      initial_(std::move(initial)), discount_(discount) {
  if (num_states <= 0 || num_actions <= 0) throw InvalidInput("TabularMdp: empty state or action set");
  const std::size_t n = static_cast<std::size_t>(num_states) * num_actions;
  if (transition.size() != n * num_states) throw InvalidInput("TabularMdp: transition size mismatch");
  std::vector<std::vector<Transition>> rows(n);
  for (std::size_t r = 0; r < n; ++r)
    for (int y = 0; y < num_states; ++y) {
      const double p = transition[r * num_states + y];
      if (p != 0.0) rows[r].push_back({y, p});
    }
  build(std::move(rows));
  validate();
}

TabularMdp::TabularMdp(int num_states, int num_actions, Vec cost,
                       std::vector<std::vector<Transition>> rows, Vec initial, double discount)
    : num_states_(num_states), num_actions_(num_actions), cost_(std::move(cost)),
      initial_(std::move(initial)), discount_(discount) {
  if (num_states <= 0 || num_actions <= 0) throw InvalidInput("TabularMdp: empty state or action set");
  if (rows.size() != num_pairs()) throw InvalidInput("TabularMdp: expected one row per state-action pair");
  build(std::move(rows));
  validate();
}

void TabularMdp::build(std::vector<std::vector<Transition>> rows) {
  offsets_.assign(rows.size() + 1, 0);
  std::size_t total = 0;
  for (const auto& r : rows) total += r.size();
  entries_.reserve(total);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    entries_.insert(entries_.end(), rows[r].begin(), rows[r].end());
    offsets_[r + 1] = entries_.size();
  }
}

void TabularMdp::validate() const {
  if (!(discount_ > 0.0 && discount_ < 1.0)) throw InvalidInput("TabularMdp: discount must lie in (0, 1)");
  if (cost_.size() != num_pairs()) throw InvalidInput("TabularMdp: cost size mismatch");
  if (initial_.size() != static_cast<std::size_t>(num_states_))
    throw InvalidInput("TabularMdp: initial distribution size mismatch");
  for (double c : cost_)
    if (!std::isfinite(c)) throw InvalidInput("TabularMdp: non-finite cost");
  check_distribution(initial_, "TabularMdp: initial distribution");
  for (int x = 0; x < num_states_; ++x)
    for (int a = 0; a < num_actions_; ++a) {
      double sum = 0.0;
      for (const Transition& t : transitions(x, a)) {
        if (t.next < 0 || t.next >= num_states_)
          throw InvalidInput("TabularMdp: successor out of range at state " + std::to_string(x));
        if (!(t.prob >= 0.0))
          throw InvalidInput("TabularMdp: negative transition probability at state " + std::to_string(x));
        sum += t.prob;
      }
      if (std::abs(sum - 1.0) > kProbTol)
        throw InvalidInput("TabularMdp: transition row (" + std::to_string(x) + ", " + std::to_string(a) +
                           ") does not sum to 1");
    }
}

double TabularMdp::cost_min() const { return *std::min_element(cost_.begin(), cost_.end()); }
double TabularMdp::cost_max() const { return *std::max_element(cost_.begin(), cost_.end()); }

double TabularMdp::probability(int x, int a, int next) const {
  double p = 0.0;
  for (const Transition& t : transitions(x, a))
    if (t.next == next) p += t.prob;
  return p;
}

// ---------------------------------------------------------------------------
// StationaryPolicy

StationaryPolicy::StationaryPolicy(int num_states, int num_actions, Vec probs)
    : num_states_(num_states), num_actions_(num_actions), probs_(std::move(probs)) {
  if (num_states <= 0 || num_actions <= 0) throw InvalidInput("StationaryPolicy: empty dimensions");
  if (probs_.size() != static_cast<std::size_t>(num_states) * num_actions)
    throw InvalidInput("StationaryPolicy: size mismatch");
  for (int x = 0; x < num_states; ++x)
    check_distribution(row(x), "StationaryPolicy: row " + std::to_string(x));
}

StationaryPolicy StationaryPolicy::uniform(int num_states, int num_actions) {
  return {num_states, num_actions,
          Vec(static_cast<std::size_t>(num_states) * num_actions, 1.0 / num_actions)};
}

StationaryPolicy StationaryPolicy::deterministic(int num_actions, const std::vector<int>& actions) {
  const int n = static_cast<int>(actions.size());
  Vec probs(static_cast<std::size_t>(n) * num_actions, 0.0);
  for (int x = 0; x < n; ++x) {
    if (actions[x] < 0 || actions[x] >= num_actions) throw InvalidInput("deterministic policy: bad action");
    probs[static_cast<std::size_t>(x) * num_actions + actions[x]] = 1.0;
  }
  return {n, num_actions, std::move(probs)};
}

StationaryPolicy StationaryPolicy::state_independent(int num_states, const Vec& dist) {
  const int a = static_cast<int>(dist.size());
  Vec probs;
  probs.reserve(static_cast<std::size_t>(num_states) * a);
  for (int x = 0; x < num_states; ++x) probs.insert(probs.end(), dist.begin(), dist.end());
  return {num_states, a, std::move(probs)};
}

int StationaryPolicy::sample(int x, Engine& rng) const {
  const double u = uniform01(rng);
  auto r = row(x);
  double acc = 0.0;
  int last = 0;
  for (int a = 0; a < num_actions_; ++a) {
    if (r[a] <= 0.0) continue;
    acc += r[a];
    last = a;
    if (u < acc) return a;
  }
  return last;
}

// ---------------------------------------------------------------------------
// Occupancy measures

OccupancyMeasure OccupancyMeasure::from_state_action(int num_states, int num_actions, Vec mu) {
  if (mu.size() != static_cast<std::size_t>(num_states) * num_actions)
    throw InvalidInput("OccupancyMeasure: size mismatch");
  OccupancyMeasure out{num_states, num_actions, std::move(mu), Vec(num_states, 0.0)};
  for (int x = 0; x < num_states; ++x)
    for (int a = 0; a < num_actions; ++a) out.state[x] += out(x, a);
  return out;
}

void check_compatible(const TabularMdp& mdp, const StationaryPolicy& policy) {
  if (mdp.num_states() != policy.num_states() || mdp.num_actions() != policy.num_actions())
    throw InvalidInput("policy dimensions (" + std::to_string(policy.num_states()) + " x " +
                       std::to_string(policy.num_actions()) + ") do not match the MDP (" +
                       std::to_string(mdp.num_states()) + " x " + std::to_string(mdp.num_actions()) + ")");
}

InducedChain induced_chain(const TabularMdp& mdp, const StationaryPolicy& policy) {
  check_compatible(mdp, policy);
  const int n = mdp.num_states();
  std::vector<Eigen::Triplet<double>> triplets;
  Vec cost(n, 0.0);
  for (int x = 0; x < n; ++x)
    for (int a = 0; a < mdp.num_actions(); ++a) {
      const double pa = policy(x, a);
      if (pa == 0.0) continue;
      cost[x] += pa * mdp.cost(x, a);
      for (const Transition& t : mdp.transitions(x, a)) triplets.emplace_back(x, t.next, pa * t.prob);
    }
  SparseMatrix p(n, n);
  p.setFromTriplets(triplets.begin(), triplets.end());  // duplicates are summed
  return {std::move(p), std::move(cost)};
}

Vec solve_discounted_left(const SparseMatrix& transition, double gamma, const Vec& rhs) {
  const int n = static_cast<int>(transition.rows());
  if (transition.cols() != n || static_cast<int>(rhs.size()) != n)
    throw InvalidInput("solve_discounted_left: dimension mismatch");
  const Eigen::Map<const Eigen::VectorXd> b(rhs.data(), n);
  Eigen::VectorXd nu;
  if (n <= kDenseLimit) {
    Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n) - gamma * Eigen::MatrixXd(transition);
    nu = m.transpose().partialPivLu().solve(b);
  } else {
    Eigen::SparseMatrix<double> m(n, n);
    m.setIdentity();
    m = Eigen::SparseMatrix<double>(m - gamma * Eigen::SparseMatrix<double>(transition)).transpose();
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(m);
    if (lu.info() != Eigen::Success) throw NumericalError("occupancy solve: factorization failed");
    nu = lu.solve(b);
  }
  const Eigen::VectorXd residual = nu - gamma * (Eigen::SparseMatrix<double>(transition).transpose() * nu) - b;
  if (!nu.allFinite() || residual.lpNorm<Eigen::Infinity>() > 1e-8)
    throw NumericalError("occupancy solve: residual check failed");
  return Vec(nu.data(), nu.data() + n);
}

namespace {

OccupancyMeasure pair_with_policy(Vec nu, const StationaryPolicy& policy) {
  const int n = policy.num_states();
  const int na = policy.num_actions();
  OccupancyMeasure out{n, na, Vec(static_cast<std::size_t>(n) * na), std::move(nu)};
  for (int x = 0; x < n; ++x)
    for (int a = 0; a < na; ++a) out.state_action[static_cast<std::size_t>(x) * na + a] = out.state[x] * policy(x, a);
  return out;
}

}  // namespace

OccupancyMeasure exact_occupancy(const TabularMdp& mdp, const StationaryPolicy& policy) {
  const InducedChain chain = induced_chain(mdp, policy);
  Vec rhs = mdp.initial();
  for (double& v : rhs) v *= 1.0 - mdp.discount();
  return pair_with_policy(solve_discounted_left(chain.transition, mdp.discount(), rhs), policy);
}

Vec stationary_distribution(const SparseMatrix& transition) {
  const int n = static_cast<int>(transition.rows());
  if (n == 0 || transition.cols() != n) throw InvalidInput("stationary_distribution: matrix must be square");
  for (int x = 0; x < n; ++x) {
    double s = 0.0;
    for (SparseMatrix::InnerIterator it(transition, x); it; ++it) {
      if (it.value() < 0.0) throw InvalidInput("stationary_distribution: negative entry");
      s += it.value();
    }
    if (std::abs(s - 1.0) > 1e-10) throw InvalidInput("stationary_distribution: row " + std::to_string(x) + " is not stochastic");
  }
  // (I - P)^T rho = 0 with the last equation replaced by 1^T rho = 1.
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(n);
  rhs(n - 1) = 1.0;
  Eigen::VectorXd rho;
  if (n <= kDenseLimit) {
    Eigen::MatrixXd m = (Eigen::MatrixXd::Identity(n, n) - Eigen::MatrixXd(transition)).transpose();
    m.row(n - 1).setOnes();
    Eigen::FullPivLU<Eigen::MatrixXd> lu(m);
    lu.setThreshold(1e-10);
    if (!lu.isInvertible())
      throw NumericalError("stationary_distribution: chain has several recurrent classes (ambiguous)");
    rho = lu.solve(rhs);
  } else {
    Eigen::SparseMatrix<double> id(n, n);
    id.setIdentity();
    Eigen::SparseMatrix<double> m = Eigen::SparseMatrix<double>(id - Eigen::SparseMatrix<double>(transition)).transpose();
    std::vector<Eigen::Triplet<double>> trip;
    trip.reserve(m.nonZeros() + n);
    for (int k = 0; k < m.outerSize(); ++k)
      for (Eigen::SparseMatrix<double>::InnerIterator it(m, k); it; ++it)
        if (it.row() != n - 1) trip.emplace_back(it.row(), it.col(), it.value());
    for (int c = 0; c < n; ++c) trip.emplace_back(n - 1, c, 1.0);
    m.setZero();
    m.setFromTriplets(trip.begin(), trip.end());
    Eigen::SparseLU<Eigen::SparseMatrix<double>, Eigen::COLAMDOrdering<int>> lu;
    lu.compute(m);
    if (lu.info() != Eigen::Success)
      throw NumericalError("stationary_distribution: singular system (ambiguous chain)");
    rho = lu.solve(rhs);
  }
  const Eigen::VectorXd residual = Eigen::SparseMatrix<double>(transition).transpose() * rho - rho;
  if (!rho.allFinite() || residual.lpNorm<Eigen::Infinity>() > 1e-8 || rho.minCoeff() < -1e-8)
    throw NumericalError("stationary_distribution: residual check failed (ambiguous chain?)");
  Vec out(rho.data(), rho.data() + n);
  for (double& v : out) v = std::max(v, 0.0);
  const double total = std::accumulate(out.begin(), out.end(), 0.0);
  for (double& v : out) v /= total;
  return out;
}

OccupancyMeasure stationary_occupancy(const TabularMdp& mdp, const StationaryPolicy& policy) {
  const InducedChain chain = induced_chain(mdp, policy);
  return pair_with_policy(stationary_distribution(chain.transition), policy);
}

OccupancyMeasure occupancy(const TabularMdp& mdp, const StationaryPolicy& policy, Criterion criterion) {
  return criterion == Criterion::Discounted ? exact_occupancy(mdp, policy) : stationary_occupancy(mdp, policy);
}

double policy_value(const TabularMdp& mdp, const StationaryPolicy& policy) {
  const OccupancyMeasure mu = exact_occupancy(mdp, policy);
  double j = 0.0;
  for (std::size_t k = 0; k < mu.state_action.size(); ++k) j += mu.state_action[k] * mdp.costs()[k];
  return j;
}

double average_cost_exact(const TabularMdp& mdp, const StationaryPolicy& policy) {
  const OccupancyMeasure mu = stationary_occupancy(mdp, policy);
  double j = 0.0;
  for (std::size_t k = 0; k < mu.state_action.size(); ++k) j += mu.state_action[k] * mdp.costs()[k];
  return j;
}

double policy_cost(const TabularMdp& mdp, const StationaryPolicy& policy, Criterion criterion) {
  return criterion == Criterion::Discounted ? policy_value(mdp, policy) : average_cost_exact(mdp, policy);
}

// ---------------------------------------------------------------------------
// Sampling

StateActionSampler::StateActionSampler(const OccupancyMeasure& mu)
    : StateActionSampler(mu.state_action, mu.num_actions) {}

StateActionSampler::StateActionSampler(std::span<const double> weights, int num_actions)
    : num_actions_(num_actions), cumulative_(weights.size()) {
  if (num_actions <= 0 || weights.empty() || weights.size() % num_actions != 0)
    throw InvalidInput("StateActionSampler: bad dimensions");
  double acc = 0.0;
  for (std::size_t k = 0; k < weights.size(); ++k) {
    // tiny negative round-off from solves counts as zero mass
    if (weights[k] < -1e-12 || !std::isfinite(weights[k])) throw InvalidInput("StateActionSampler: negative weight");
    acc += std::max(weights[k], 0.0);
    cumulative_[k] = acc;
  }
  if (!(acc > 0.0)) throw InvalidInput("StateActionSampler: all-zero occupancy measure");
}

std::size_t StateActionSampler::sample_index(Engine& rng) const {
  const double target = uniform01(rng) * cumulative_.back();
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), target);
  if (it == cumulative_.end()) {
    // target rounded up to the total: take the last pair with positive mass
    it = std::lower_bound(cumulative_.begin(), cumulative_.end(), cumulative_.back());
  }
  return static_cast<std::size_t>(it - cumulative_.begin());
}

std::pair<int, int> StateActionSampler::sample(Engine& rng) const {
  const std::size_t k = sample_index(rng);
  return {static_cast<int>(k / num_actions_), static_cast<int>(k % num_actions_)};
}

}  // namespace mixopt
