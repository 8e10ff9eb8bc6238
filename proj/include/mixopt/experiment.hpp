#pragma once

#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "mixopt/config.hpp"
#include "mixopt/dual.hpp"
#include "mixopt/envs.hpp"
#include "mixopt/io.hpp"
#include "mixopt/mixture.hpp"

namespace mixopt {

inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;

/**
 * The environment and base policies of a config. Tabular environments carry
 * an MDP and a policy basis; the eight-queue network carries a simulator and
 * one action rule per base policy.
 */
struct Problem {
  std::optional<TabularMdp> mdp;
  std::optional<PolicyBasis> basis;
  std::unique_ptr<QueueNetworkSimulator> sim;
  std::vector<ActionRule> rules;
  Criterion criterion = Criterion::Average;
  std::string env_hash;
  std::string policy_hash;

  bool tabular() const { return mdp.has_value(); }
  int num_policies() const { return tabular() ? basis->size() : static_cast<int>(rules.size()); }
};

Problem build_problem(const ExperimentConfig& config);

/// Base-policy occupancies, read from `cache_path` when its hashes match and
/// (re)written there otherwise. `reused` reports which happened.
OccupancyCache base_occupancies(const Problem& problem, const ExperimentConfig& config, const std::string& cache_path,
                                bool* reused = nullptr);

DualSpace dual_space(const OccupancyCache& occ, double radius);
/// Per-row costs of a dual space (c(x, a) for every row).
Vec dual_costs(const Problem& problem, const DualSpace& space);

/// True cost of the extracted policy: exact for tabular problems, simulated
/// with `eval_horizon` steps otherwise.
double evaluate_theta(const Problem& problem, const ExperimentConfig& config, const DualSpace& space,
                      const DualPoint& theta);
double evaluate_weights(const Problem& problem, const ExperimentConfig& config, const MixtureWeight& w);
MixtureEvaluator primal_evaluator(const Problem& problem, const ExperimentConfig& config);

/// Base-policy costs J(pi_i).
Vec base_costs(const Problem& problem, const ExperimentConfig& config);

/// SGD with the config's settings, including the optional U-aware pilot.
SgdResult run_dual_sgd(const Problem& problem, const ExperimentConfig& config, const DualSpace& space,
                       bool record_true_cost);

// Entry points; each returns an exit status and reports errors on `err`.
// Artifacts go to `out_dir` (created if needed).

/// `occupancy`: occupancies.txt plus base-policy costs.
int run_occupancy(const ExperimentConfig& config, const std::string& out_dir, std::ostream& log, std::ostream& err);
/// `optimize` / `hardness`: occupancies.txt, trace.csv, summary.txt.
int run_experiment(const ExperimentConfig& config, const std::string& out_dir, std::ostream& log, std::ostream& err);
/// `compare`: compare.csv with `step,method,objective`.
int compare_methods(const ExperimentConfig& config, const std::string& out_dir, std::ostream& log, std::ostream& err);

}  // namespace mixopt
