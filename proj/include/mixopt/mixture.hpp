#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "mixopt/mdp.hpp"
#include "mixopt/simulator.hpp"

namespace mixopt {

/// m >= 1 base policies over the same (X, A).
class PolicyBasis {
 public:
  explicit PolicyBasis(std::vector<StationaryPolicy> policies);

  int size() const { return static_cast<int>(policies_.size()); }
  int num_states() const { return policies_.front().num_states(); }
  int num_actions() const { return policies_.front().num_actions(); }
  const StationaryPolicy& operator[](int i) const { return policies_[i]; }
  const std::vector<StationaryPolicy>& policies() const { return policies_; }

 private:
  std::vector<StationaryPolicy> policies_;
};

/**
 * Mixture weights. `on_simplex()` weights are validated (w >= 0, sum 1);
 * off-simplex weights are allowed only through `MixtureWeight::unchecked`
 * and are checked per state when mixed.
 */
class MixtureWeight {
 public:
  explicit MixtureWeight(Vec w);  // must lie on the simplex
  static MixtureWeight unchecked(Vec w);
  static MixtureWeight vertex(int m, int i);
  static MixtureWeight uniform(int m);

  bool on_simplex() const { return simplex_; }
  int size() const { return static_cast<int>(w_.size()); }
  double operator[](int i) const { return w_[i]; }
  const Vec& values() const { return w_; }

 private:
  MixtureWeight(Vec w, bool simplex) : w_(std::move(w)), simplex_(simplex) {}
  Vec w_;
  bool simplex_;
};

/// pi_w = sum_i w_i pi_i. Off-simplex weights must still give valid rows;
/// otherwise InvalidInput naming the first offending state.
StationaryPolicy mix_policies(const PolicyBasis& basis, const MixtureWeight& w);

double primal_objective(const TabularMdp& mdp, const PolicyBasis& basis, const MixtureWeight& w,
                        Criterion criterion = Criterion::Discounted);

/// Euclidean projection onto the probability simplex (sort-and-threshold).
MixtureWeight project_simplex(const Vec& v);

using MixtureEvaluator = std::function<double(const MixtureWeight&)>;

MixtureEvaluator exact_evaluator(const TabularMdp& mdp, const PolicyBasis& basis,
                                 Criterion criterion = Criterion::Discounted);

/// Average cost of the mixture rule (pick base rule i ~ w at every step) by
/// simulation. Every evaluation reuses `seed`, i.e. common random numbers.
MixtureEvaluator simulated_evaluator(const ForwardSimulator& sim, std::vector<ActionRule> rules,
                                     std::int64_t horizon, std::uint64_t seed);

/// Rule that picks a base rule from w at every step, then acts with it.
ActionRule mixture_rule(std::vector<ActionRule> rules, const MixtureWeight& w);

inline constexpr double kExactFdStep = 1e-2;
inline constexpr double kSimulatedFdStep = 0.05;

/// Central differences along the simplex: for each i,
/// (f(P(w + d e_i)) - f(P(w - d e_i))) / (2 d) with P the simplex projection.
Vec finite_difference_gradient(const MixtureEvaluator& evaluate, const MixtureWeight& w, double step);

enum class StepSchedule { Constant, InverseSqrt };

struct PrimalDescentOptions {
  int iterations = 50;
  double step_size = 0.1;
  StepSchedule schedule = StepSchedule::Constant;
  double fd_step = kExactFdStep;
};

struct PrimalTraceRow {
  int iter;
  double objective;
  Vec w;
};

struct PrimalResult {
  MixtureWeight best;
  double best_objective;
  std::vector<PrimalTraceRow> trace;  // iterate 0 is w0
};

/// w_{t+1} = P(w_t - eta_t g_t); returns the best iterate seen.
PrimalResult primal_descent(const MixtureEvaluator& evaluate, const MixtureWeight& w0,
                            const PrimalDescentOptions& opts);

}  // namespace mixopt
