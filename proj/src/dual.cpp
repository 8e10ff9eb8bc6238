#include "mixopt/dual.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "mixopt/kernels.hpp"

namespace mixopt {

// ---------------------------------------------------------------------------
// DualSpace

DualSpace::DualSpace(const std::vector<OccupancyMeasure>& columns, double radius)
    : num_states_(columns.empty() ? 0 : columns.front().num_states),
      num_actions_(columns.empty() ? 0 : columns.front().num_actions),
      m_(static_cast<int>(columns.size())),
      radius_(radius) {
  if (columns.empty()) throw InvalidInput("DualSpace: need at least one occupancy measure");
  matrix_.reserve(rows() * m_);
  for (const auto& col : columns) {
    if (col.num_states != num_states_ || col.num_actions != num_actions_ || col.state_action.size() != rows())
      throw InvalidInput("DualSpace: occupancy measures disagree on dimensions");
    matrix_.insert(matrix_.end(), col.state_action.begin(), col.state_action.end());
  }
  finish();
}

DualSpace::DualSpace(int num_states, int num_actions, int m, Vec matrix, double radius,
                     std::vector<StateKey> state_keys)
    : num_states_(num_states), num_actions_(num_actions), m_(m), matrix_(std::move(matrix)), radius_(radius),
      state_keys_(std::move(state_keys)) {
  if (num_states <= 0 || num_actions <= 0 || m <= 0) throw InvalidInput("DualSpace: empty dimensions");
  if (matrix_.size() != rows() * m_) throw InvalidInput("DualSpace: matrix size mismatch");
  if (!state_keys_.empty() && state_keys_.size() != static_cast<std::size_t>(num_states_))
    throw InvalidInput("DualSpace: one state key per state expected");
  finish();
}

void DualSpace::finish() {
  if (!(radius_ * radius_ * m_ >= 1.0 - 1e-12))
    throw InvalidInput("DualSpace: radius S must be at least 1/sqrt(m) (Theta would be empty)");
  for (int i = 0; i < m_; ++i) {
    auto col = column(i);
    double sum = 0.0;
    for (double v : col) {
      if (v < -1e-12 || !std::isfinite(v))
        throw InvalidInput("DualSpace: column " + std::to_string(i) + " has a negative entry");
      sum += v;
    }
    if (std::abs(sum - 1.0) > 1e-9) throw InvalidInput("DualSpace: column " + std::to_string(i) + " does not sum to 1");
  }
  row_mass_.assign(rows(), 0.0);
  for (int i = 0; i < m_; ++i) kernels::axpy(1.0, column(i), row_mass_);
}

Vec DualSpace::project_costs(std::span<const double> c) const {
  if (c.size() != rows()) throw InvalidInput("DualSpace: cost vector length mismatch");
  Vec out(m_);
  for (int i = 0; i < m_; ++i) out[i] = kernels::dot(column(i), c);
  return out;
}

// ---------------------------------------------------------------------------
// DualPoint

DualPoint::DualPoint(Vec theta, double radius) : theta_(std::move(theta)) {
  if (theta_.empty()) throw InvalidInput("DualPoint: empty");
  double sum = 0.0;
  double sq = 0.0;
  for (double v : theta_) {
    sum += v;
    sq += v * v;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InvalidInput("DualPoint: coordinates must sum to 1");
  if (std::sqrt(sq) > radius + 1e-9) throw InvalidInput("DualPoint: norm exceeds the radius S");
}

DualPoint DualPoint::vertex(int m, int i, double radius) {
  Vec t(m, 0.0);
  t.at(i) = 1.0;
  return {std::move(t), radius};
}

// ---------------------------------------------------------------------------
// Surrogate, subgradients

Vec combine(const DualSpace& space, std::span<const double> theta) {
  if (theta.size() != static_cast<std::size_t>(space.size())) throw InvalidInput("xi: theta length mismatch");
  Vec out(space.rows());
  kernels::gemv_colmajor(space.matrix(), space.rows(), space.size(), theta, out);
  return out;
}

Vec xi(const DualSpace& space, const DualPoint& theta) { return combine(space, theta.values()); }

StationaryPolicy extract_policy(std::span<const double> xi, int num_states, int num_actions) {
  if (xi.size() != static_cast<std::size_t>(num_states) * num_actions)
    throw InvalidInput("extract_policy: xi length does not match X * A");
  Vec probs(xi.size());
  for (int x = 0; x < num_states; ++x) {
    const std::size_t base = static_cast<std::size_t>(x) * num_actions;
    double total = 0.0;
    for (int a = 0; a < num_actions; ++a) total += std::max(xi[base + a], 0.0);
    for (int a = 0; a < num_actions; ++a)
      probs[base + a] = total > 0.0 ? std::max(xi[base + a], 0.0) / total : 1.0 / num_actions;
  }
  return {num_states, num_actions, std::move(probs)};
}

double constraint_violation(std::span<const double> xi) { return kernels::negative_mass(xi); }

double surrogate_loss_unchecked(const DualSpace& space, std::span<const double> theta, std::span<const double> c,
                                double penalty) {
  if (c.size() != space.rows()) throw InvalidInput("surrogate_loss: cost vector length mismatch");
  const Vec x = combine(space, theta);
  return kernels::dot(c, x) + penalty * kernels::negative_mass(x);
}

double surrogate_loss(const DualSpace& space, const DualPoint& theta, std::span<const double> c, double penalty) {
  if (!(penalty > 0.0)) throw InvalidInput("surrogate_loss: penalty H must be positive");
  return surrogate_loss_unchecked(space, theta.values(), c, penalty);
}

Vec exact_surrogate_subgradient(const DualSpace& space, const DualPoint& theta, std::span<const double> c,
                                double penalty) {
  if (!(penalty > 0.0)) throw InvalidInput("exact_surrogate_subgradient: penalty H must be positive");
  const Vec x = xi(space, theta);
  Vec g = space.project_costs(c);
  for (int i = 0; i < space.size(); ++i) g[i] -= penalty * kernels::sum_where_negative(space.column(i), x);
  return g;
}

Vec stochastic_subgradient(const DualSpace& space, std::span<const double> theta, std::size_t row,
                           std::span<const double> cost_projection, double penalty) {
  const int m = space.size();
  Vec g(cost_projection.begin(), cost_projection.end());
  double xi_row = 0.0;
  for (int i = 0; i < m; ++i) xi_row += theta[i] * space.at(row, i);
  if (xi_row < 0.0) {
    const double mass = space.row_mass(row);
    if (!(mass > 0.0)) throw NumericalError("stochastic_subgradient: sampled a pair with zero mixture mass");
    const double scale = penalty * m / mass;
    for (int i = 0; i < m; ++i) g[i] -= scale * space.at(row, i);
  }
  return g;
}

// ---------------------------------------------------------------------------
// Projection

DualPoint project_theta(const Vec& v, double radius) {
  const auto m = static_cast<double>(v.size());
  if (v.empty()) throw InvalidInput("project_theta: empty vector");
  if (!(radius * radius * m >= 1.0 - 1e-12))
    throw InvalidInput("project_theta: S < 1/sqrt(m), the feasible set is empty");
  const double shift = (std::accumulate(v.begin(), v.end(), 0.0) - 1.0) / m;
  Vec p(v.size());
  double sq = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    p[i] = v[i] - shift;
    sq += p[i] * p[i];
  }
  if (std::sqrt(sq) <= radius) return {std::move(p), radius};
  // p - c is orthogonal to 1, so scaling it to length r lands on the sphere.
  const double center = 1.0 / m;
  const double r = std::sqrt(std::max(radius * radius - center, 0.0));
  double dist = 0.0;
  for (double x : p) dist += (x - center) * (x - center);
  dist = std::sqrt(dist);
  for (double& x : p) x = center + r * (x - center) / dist;
  return {std::move(p), radius};
}

// ---------------------------------------------------------------------------
// SGD

MixtureSampler::MixtureSampler(const DualSpace& space) {
  columns_.reserve(space.size());
  for (int i = 0; i < space.size(); ++i) columns_.emplace_back(space.column(i), space.num_actions());
}

std::size_t MixtureSampler::sample_row(Engine& rng) const {
  const int i = uniform_index(rng, static_cast<int>(columns_.size()));
  return columns_[i].sample_index(rng);
}

SgdParameters resolve_parameters(const SgdRun& run, int m) {
  if (run.num_rounds < 1) throw InvalidInput("SgdRun: T must be >= 1");
  if (run.batch < 1) throw InvalidInput("SgdRun: batch must be >= 1");
  if (!(run.confidence > 0.0 && run.confidence < 1.0)) throw InvalidInput("SgdRun: delta must lie in (0, 1)");
  const double sqrt_t = std::sqrt(static_cast<double>(run.num_rounds));
  SgdParameters p{};
  if (run.pilot_violation && *run.pilot_violation > 0.0) {
    p.accuracy = std::sqrt((1.0 - run.discount) * *run.pilot_violation);
  } else {
    // invert T ~ S^2 / eta^2 log(1/delta)
    p.accuracy = run.radius * std::sqrt(std::log(1.0 / run.confidence)) / sqrt_t;
  }
  p.penalty = run.penalty.value_or(1.0 / p.accuracy);
  if (!(p.penalty > 0.0)) throw InvalidInput("SgdRun: H must be positive");
  p.gradient_scale = std::sqrt(static_cast<double>(m)) + p.penalty * m;
  p.learning_rate = run.learning_rate.value_or(run.radius / (p.gradient_scale * sqrt_t));
  if (!(p.learning_rate > 0.0)) throw InvalidInput("SgdRun: learning rate must be positive");
  p.record_every = run.record_every > 0 ? run.record_every : std::max<std::int64_t>(1, run.num_rounds / 100);
  return p;
}

SgdResult sgd_optimize(const DualSpace& space, std::span<const double> c, const SgdRun& run,
                       const DualEvaluator& true_cost) {
  const int m = space.size();
  const SgdParameters params = resolve_parameters(run, m);
  if (c.size() != space.rows()) throw InvalidInput("sgd_optimize: cost vector length mismatch");

  const Vec cost_proj = space.project_costs(c);
  const MixtureSampler sampler(space);
  Engine rng = make_stream(run.seed, "sgd");

  double c_inf = 0.0;
  for (double v : c) c_inf = std::max(c_inf, std::abs(v));
  double max_ratio = 0.0;
  for (std::size_t r = 0; r < space.rows(); ++r) {
    if (space.row_mass(r) <= 0.0) continue;
    for (int i = 0; i < m; ++i) max_ratio = std::max(max_ratio, space.at(r, i) / space.row_mass(r));
  }

  DualPoint theta = project_theta(Vec(m, 0.0), space.radius());
  Vec theta_sum(m, 0.0);
  Vec g(m);
  std::vector<SgdTraceRow> trace;
  double max_norm = 0.0;

  for (std::int64_t t = 1; t <= run.num_rounds; ++t) {
    const Vec& th = theta.values();
    for (int i = 0; i < m; ++i) theta_sum[i] += th[i];

    if (t == 1 || t % params.record_every == 0 || t == run.num_rounds) {
      const Vec x = xi(space, theta);
      SgdTraceRow row{t, kernels::dot(c, x) + params.penalty * kernels::negative_mass(x), kernels::negative_mass(x), th,
                      std::nullopt};
      if (true_cost) row.true_cost = true_cost(theta);
      trace.push_back(std::move(row));
    }

    std::fill(g.begin(), g.end(), 0.0);
    for (int b = 0; b < run.batch; ++b) {
      const Vec gb = stochastic_subgradient(space, th, sampler.sample_row(rng), cost_proj, params.penalty);
      for (int i = 0; i < m; ++i) g[i] += gb[i];
    }
    double norm = 0.0;
    for (int i = 0; i < m; ++i) {
      g[i] /= run.batch;
      norm += g[i] * g[i];
    }
    max_norm = std::max(max_norm, std::sqrt(norm));

    Vec next(th);
    for (int i = 0; i < m; ++i) next[i] -= params.learning_rate * g[i];
    theta = project_theta(next, space.radius());
  }

  for (double& v : theta_sum) v /= static_cast<double>(run.num_rounds);
  // the average is feasible by convexity; re-projecting only strips round-off
  DualPoint theta_hat = project_theta(theta_sum, space.radius());
  const double bound = std::sqrt(static_cast<double>(m)) * c_inf + params.penalty * m * max_ratio;
  return {std::move(theta_hat), params, std::move(trace), max_norm, bound};
}

// ---------------------------------------------------------------------------
// Diagnostics

double overlap_lambda(const DualSpace& space) {
  constexpr double kZero = 1e-12;
  const int m = space.size();
  if (m < 2) throw InvalidInput("overlap_lambda: need at least two base policies");
  double r = 1.0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) {
      if (i == j) continue;
      for (std::size_t k = 0; k < space.rows(); ++k) {
        const double mj = space.at(k, j);
        if (mj <= kZero) continue;
        const double mi = space.at(k, i);
        if (mi <= kZero) return 0.0;
        r = std::min(r, mi / mj);
      }
    }
  if (r >= 1.0) return kUnboundedOverlap;
  return r / (1.0 - r);
}

double dual_objective(const TabularMdp& mdp, const DualSpace& space, const DualPoint& theta, Criterion criterion) {
  if (mdp.num_states() != space.num_states() || mdp.num_actions() != space.num_actions())
    throw InvalidInput("dual_objective: space does not match the MDP");
  return policy_cost(mdp, extract_policy(xi(space, theta), space.num_states(), space.num_actions()), criterion);
}

ActionRule extracted_rule(const DualSpace& space, const DualPoint& theta) {
  const StationaryPolicy policy = extract_policy(xi(space, theta), space.num_states(), space.num_actions());
  std::unordered_map<StateKey, int> row_of;
  const auto& keys = space.state_keys();
  for (std::size_t r = 0; r < keys.size(); ++r) row_of.emplace(keys[r], static_cast<int>(r));
  const int na = space.num_actions();
  return [policy, row_of = std::move(row_of), na](StateKey s, Engine& rng) {
    if (row_of.empty()) return policy.sample(static_cast<int>(s), rng);
    auto it = row_of.find(s);
    if (it == row_of.end()) return uniform_index(rng, na);
    return policy.sample(it->second, rng);
  };
}

std::vector<GridPoint> dual_grid_search(int m, double radius, double resolution, const DualEvaluator& f,
                                        std::size_t max_points) {
  if (m < 1) throw InvalidInput("dual_grid_search: m must be >= 1");
  if (!(resolution > 0.0)) throw InvalidInput("dual_grid_search: resolution must be positive");
  if (!(radius * radius * m >= 1.0 - 1e-12)) throw InvalidInput("dual_grid_search: S < 1/sqrt(m)");
  const double center = 1.0 / m;
  const double r = std::sqrt(std::max(radius * radius - center, 0.0));
  if (m == 1) return {{{1.0}, f(DualPoint({1.0}, radius))}};
  const int dims = m - 1;
  const long half = static_cast<long>(std::floor(r / resolution));
  const double side = 2.0 * static_cast<double>(half) + 1.0;
  if (std::pow(side, dims) > static_cast<double>(max_points))
    throw InvalidInput("dual_grid_search: lattice too large; raise the resolution or lower m");

  // Helmert basis of {sum = 0}
  std::vector<Vec> basis(dims, Vec(m, 0.0));
  for (int k = 1; k <= dims; ++k) {
    const double norm = std::sqrt(static_cast<double>(k) * (k + 1));
    for (int i = 0; i < k; ++i) basis[k - 1][i] = 1.0 / norm;
    basis[k - 1][k] = -static_cast<double>(k) / norm;
  }
  std::vector<GridPoint> out;
  std::vector<long> idx(dims, -half);
  while (true) {
    double sq = 0.0;
    for (long v : idx) sq += (v * resolution) * (v * resolution);
    if (sq <= r * r * (1.0 + 1e-12)) {
      Vec theta(m, center);
      for (int k = 0; k < dims; ++k)
        for (int i = 0; i < m; ++i) theta[i] += idx[k] * resolution * basis[k][i];
      DualPoint p = project_theta(theta, radius);
      out.push_back({p.values(), f(p)});
    }
    int d = 0;
    while (d < dims && ++idx[d] > half) idx[d++] = -half;
    if (d == dims) break;
  }
  return out;
}

}  // namespace mixopt
