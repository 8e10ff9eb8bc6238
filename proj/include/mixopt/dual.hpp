#pragma once

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <vector>

#include "mixopt/mdp.hpp"
#include "mixopt/simulator.hpp"

namespace mixopt {

/**
 * The dual parameter space: linear combinations xi = M theta of the base
 * policies' state-action occupancy measures, with sum(theta) = 1 and
 * ||theta||_2 <= S.
 *
 * M is stored column-major (one occupancy measure per column, rows in
 * x * A + a order) so that xi is a sequence of axpy-like column updates.
 * Spaces built from simulator visit tables also carry the state key of
 * every row block.
 */
class DualSpace {
 public:
  DualSpace(const std::vector<OccupancyMeasure>& columns, double radius);
  /// `matrix` is rows x m column-major; rows = num_states * num_actions.
  DualSpace(int num_states, int num_actions, int m, Vec matrix, double radius,
            std::vector<StateKey> state_keys = {});

  int num_states() const { return num_states_; }
  int num_actions() const { return num_actions_; }
  std::size_t rows() const { return static_cast<std::size_t>(num_states_) * num_actions_; }
  int size() const { return m_; }
  double radius() const { return radius_; }

  std::span<const double> column(int i) const { return {matrix_.data() + i * rows(), rows()}; }
  double at(std::size_t row, int i) const { return matrix_[i * rows() + row]; }
  const Vec& matrix() const { return matrix_; }
  /// sum_i M(row, i): m times the uniform-mixture sampling probability.
  double row_mass(std::size_t row) const { return row_mass_[row]; }
  const std::vector<StateKey>& state_keys() const { return state_keys_; }

  /// M^T c.
  Vec project_costs(std::span<const double> c) const;

 private:
  void finish();

  int num_states_;
  int num_actions_;
  int m_;
  Vec matrix_;
  double radius_;
  Vec row_mass_;
  std::vector<StateKey> state_keys_;
};

/// theta with sum 1 (within 1e-9) and norm at most S (+1e-9).
class DualPoint {
 public:
  DualPoint(Vec theta, double radius);
  static DualPoint vertex(int m, int i, double radius);

  int size() const { return static_cast<int>(theta_.size()); }
  double operator[](int i) const { return theta_[i]; }
  const Vec& values() const { return theta_; }

 private:
  Vec theta_;
};

Vec xi(const DualSpace& space, const DualPoint& theta);
/// xi for an arbitrary coefficient vector (no feasibility check).
Vec combine(const DualSpace& space, std::span<const double> theta);

/// Positive-part normalization per state, uniform where no entry is positive.
StationaryPolicy extract_policy(std::span<const double> xi, int num_states, int num_actions);

/// U = sum |min(xi, 0)|.
double constraint_violation(std::span<const double> xi);

/// L(theta) = c^T xi + H U(xi).
double surrogate_loss(const DualSpace& space, const DualPoint& theta, std::span<const double> c, double penalty);
double surrogate_loss_unchecked(const DualSpace& space, std::span<const double> theta, std::span<const double> c,
                                double penalty);

/// M^T c - H sum_{(x,a): xi(x,a) < 0} M(x,a)^T.
Vec exact_surrogate_subgradient(const DualSpace& space, const DualPoint& theta, std::span<const double> c,
                                double penalty);

/**
 * Importance-weighted one-sample subgradient for a pair `row` drawn from the
 * uniform mixture (1/m) sum_i mu_i:
 *   g = M^T c - H * m * M(row)^T / sum_i M(row, i) * [xi(row) < 0].
 * `cost_projection` is M^T c.
 */
Vec stochastic_subgradient(const DualSpace& space, std::span<const double> theta, std::size_t row,
                           std::span<const double> cost_projection, double penalty);

/// Euclidean projection onto {sum = 1} intersected with {||.||_2 <= S}.
DualPoint project_theta(const Vec& v, double radius);

/// Draws i uniformly from [m], then a pair from mu_i.
class MixtureSampler {
 public:
  explicit MixtureSampler(const DualSpace& space);
  std::size_t sample_row(Engine& rng) const;

 private:
  std::vector<StateActionSampler> columns_;
};

struct SgdRun {
  std::int64_t num_rounds = 1000;     // T
  std::optional<double> penalty;      // H; default 1 / accuracy
  std::optional<double> learning_rate;  // eta_t; default S / (G' sqrt(T))
  double radius = 2.0;                // S
  double confidence = 0.05;           // delta
  std::uint64_t seed = 0;
  std::int64_t record_every = 0;      // 0 -> max(1, T / 100)
  int batch = 1;
  // U-aware tuning: accuracy = sqrt((1 - gamma) U) from a pilot estimate of U.
  std::optional<double> pilot_violation;
  double discount = 0.9;
};

/// H, eta_t and G' after defaults are applied.
struct SgdParameters {
  double penalty;
  double learning_rate;
  double gradient_scale;  // G' = sqrt(m) + H m
  double accuracy;        // the eta for which H = 1 / eta
  std::int64_t record_every;
};

SgdParameters resolve_parameters(const SgdRun& run, int m);

struct SgdTraceRow {
  std::int64_t t;
  double surrogate;
  double violation;
  Vec theta;
  std::optional<double> true_cost;
};

struct SgdResult {
  DualPoint theta_hat;
  SgdParameters params;
  std::vector<SgdTraceRow> trace;
  double max_gradient_norm;
  double gradient_bound;  // sqrt(m) ||c||_inf + H m max_row max_i M(row,i) / row_mass
};

using DualEvaluator = std::function<double(const DualPoint&)>;

/**
 * Projected stochastic subgradient descent on L over Theta, started at the
 * uniform point (the projection of 0). Returns the average of theta_1..theta_T.
 * `true_cost`, when given, is evaluated at recorded iterates.
 */
SgdResult sgd_optimize(const DualSpace& space, std::span<const double> c, const SgdRun& run,
                       const DualEvaluator& true_cost = nullptr);

inline constexpr double kUnboundedOverlap = std::numeric_limits<double>::infinity();

/// Largest lambda with lambda/(1+lambda) mu_j <= mu_i for all i, j, entries;
/// kUnboundedOverlap when all columns coincide. Entries <= 1e-12 count as zero.
double overlap_lambda(const DualSpace& space);

/// True cost J(pi_theta) of the extracted policy (not the surrogate).
double dual_objective(const TabularMdp& mdp, const DualSpace& space, const DualPoint& theta,
                      Criterion criterion = Criterion::Discounted);

/// Extracted policy as an action rule for simulator spaces; states that were
/// never visited fall back to uniform actions.
ActionRule extracted_rule(const DualSpace& space, const DualPoint& theta);

struct GridPoint {
  Vec theta;
  double value;
};

/// Evaluates f on a lattice of Theta (spacing `resolution` in an orthonormal
/// frame of the hyperplane). Throws InvalidInput if that would exceed
/// `max_points` points.
std::vector<GridPoint> dual_grid_search(int m, double radius, double resolution, const DualEvaluator& f,
                                        std::size_t max_points = 2'000'000);

}  // namespace mixopt
