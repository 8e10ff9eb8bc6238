#include "mixopt/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include "mixopt/hardness.hpp"

namespace mixopt {

namespace {

std::string join(const Vec& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? ", " : "") + format_double(v[i]);
  return s;
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << content;
  if (!out) throw std::runtime_error("write failed for " + path.string());
}

std::filesystem::path prepare_dir(const std::string& out_dir) {
  std::filesystem::path dir(out_dir.empty() ? "." : out_dir);
  std::filesystem::create_directories(dir);
  return dir;
}

std::string describe_network(const QueueNetworkConfig& n) {
  std::ostringstream s;
  s << "queues=" << n.num_queues << " capacity=" << n.capacity << " arrivals=" << join(n.arrival_rates)
    << " services=" << join(n.service_rates) << " servers=";
  for (const auto& srv : n.servers) {
    for (int q : srv) s << q << ',';
    s << ';';
  }
  s << " routing=";
  for (int r : n.routing) s << r << ',';
  return s.str();
}

template <class Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const NumericalError& e) {
    err << "numerical failure: " << e.what() << '\n';
    return kExitNumerical;
  } catch (const InvalidInput& e) {
    err << "invalid input: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

// ---------------------------------------------------------------------------
// Problem assembly

Problem build_problem(const ExperimentConfig& config) {
  require_environment_keys(config);
  const KeyValueFile& f = config.raw;
  Problem p;
  p.criterion = config.criterion;
  try {
    switch (config.env) {
      case EnvKind::SingleQueue: {
        SingleQueueConfig sq = config.single;
        sq.discount = config.gamma;
        p.mdp.emplace(single_queue_mdp(sq));
        std::vector<StationaryPolicy> pols;
        for (const Vec& dist : config.policies) pols.push_back(StationaryPolicy::state_independent(p.mdp->num_states(), dist));
        p.basis.emplace(std::move(pols));
        break;
      }
      case EnvKind::FourQueue: {
        p.mdp.emplace(queue_network_mdp(config.network, config.gamma));
        std::vector<StationaryPolicy> pols;
        for (const Vec& params : config.policies) pols.push_back(family_policy(config.network, params));
        p.basis.emplace(std::move(pols));
        break;
      }
      case EnvKind::EightQueue: {
        if (config.criterion != Criterion::Average)
          f.fail("criterion", "the eight-queue network is only evaluated under the average criterion");
        p.sim = std::make_unique<QueueNetworkSimulator>(config.network);
        for (const Vec& params : config.policies) p.rules.push_back(family_rule(config.network, params));
        break;
      }
    }
  } catch (const ConfigError&) {
    throw;
  } catch (const InvalidInput& e) {
    f.fail("policies", e.what());
  }

  if (p.tabular()) {
    p.env_hash = hex64(hash_mdp(*p.mdp) ^ hash_text(to_string(config.criterion)));
    p.policy_hash = hex64(hash_policies(*p.basis));
  } else {
    std::ostringstream env;
    env << describe_network(config.network) << " horizon=" << config.horizon << " burn_in=" << config.burn_in
        << " seed=" << config.seed;
    p.env_hash = hex64(hash_text(env.str()));
    std::string pol;
    for (const Vec& v : config.policies) pol += join(v) + ";";
    p.policy_hash = hex64(hash_text(pol));
  }
  return p;
}

OccupancyCache base_occupancies(const Problem& problem, const ExperimentConfig& config, const std::string& cache_path,
                                bool* reused) {
  if (auto cached = load_cached_occupancies(cache_path, problem.env_hash, problem.policy_hash);
      cached && static_cast<int>(cached->measures.size()) == problem.num_policies()) {
    if (reused) *reused = true;
    return std::move(*cached);
  }
  if (reused) *reused = false;

  OccupancyCache cache{problem.env_hash, problem.policy_hash, {}, {}};
  if (problem.tabular()) {
    for (const auto& pi : problem.basis->policies()) cache.measures.push_back(occupancy(*problem.mdp, pi, problem.criterion));
  } else {
    std::vector<VisitTable> tables;
    for (std::size_t i = 0; i < problem.rules.size(); ++i)
      tables.push_back(trajectory_visits(*problem.sim, problem.rules[i], config.horizon, config.burn_in,
                                         derive_seed(config.seed, "occupancy", i)));
    std::vector<StateKey> keys;
    for (const auto& t : tables) keys.insert(keys.end(), t.states.begin(), t.states.end());
    std::sort(keys.begin(), keys.end());
    keys.erase(std::unique(keys.begin(), keys.end()), keys.end());
    const int X = static_cast<int>(keys.size());
    const int A = problem.sim->num_actions();
    for (const auto& t : tables) {
      Vec mu(static_cast<std::size_t>(X) * A, 0.0);
      const double total = static_cast<double>(t.total());
      for (int x = 0; x < X; ++x) {
        auto it = t.row_of.find(keys[x]);
        if (it == t.row_of.end()) continue;
        for (int a = 0; a < A; ++a)
          mu[static_cast<std::size_t>(x) * A + a] = static_cast<double>(t.counts[it->second * A + a]) / total;
      }
      cache.measures.push_back(OccupancyMeasure::from_state_action(X, A, std::move(mu)));
    }
    cache.state_keys = std::move(keys);
  }
  save_occupancy_cache(cache_path, cache);
  return cache;
}

DualSpace dual_space(const OccupancyCache& occ, double radius) {
  const int X = occ.measures.front().num_states;
  const int A = occ.measures.front().num_actions;
  Vec matrix;
  matrix.reserve(static_cast<std::size_t>(X) * A * occ.measures.size());
  for (const auto& mu : occ.measures) matrix.insert(matrix.end(), mu.state_action.begin(), mu.state_action.end());
  return DualSpace(X, A, static_cast<int>(occ.measures.size()), std::move(matrix), radius, occ.state_keys);
}

Vec dual_costs(const Problem& problem, const DualSpace& space) {
  if (problem.tabular()) return problem.mdp->costs();
  Vec c(space.rows());
  const auto& keys = space.state_keys();
  for (int x = 0; x < space.num_states(); ++x)
    for (int a = 0; a < space.num_actions(); ++a)
      c[static_cast<std::size_t>(x) * space.num_actions() + a] = problem.sim->cost(keys[x], a);
  return c;
}

double evaluate_theta(const Problem& problem, const ExperimentConfig& config, const DualSpace& space,
                      const DualPoint& theta) {
  if (problem.tabular()) return dual_objective(*problem.mdp, space, theta, problem.criterion);
  return simulate_average_cost(*problem.sim, extracted_rule(space, theta), config.eval_horizon,
                               derive_seed(config.seed, "evaluate"))
      .mean;
}

MixtureEvaluator primal_evaluator(const Problem& problem, const ExperimentConfig& config) {
  if (problem.tabular()) return exact_evaluator(*problem.mdp, *problem.basis, problem.criterion);
  return simulated_evaluator(*problem.sim, problem.rules, config.eval_horizon, derive_seed(config.seed, "evaluate"));
}

double evaluate_weights(const Problem& problem, const ExperimentConfig& config, const MixtureWeight& w) {
  return primal_evaluator(problem, config)(w);
}

Vec base_costs(const Problem& problem, const ExperimentConfig& config) {
  const MixtureEvaluator eval = primal_evaluator(problem, config);
  Vec out;
  for (int i = 0; i < problem.num_policies(); ++i) out.push_back(eval(MixtureWeight::vertex(problem.num_policies(), i)));
  return out;
}

SgdResult run_dual_sgd(const Problem& problem, const ExperimentConfig& config, const DualSpace& space,
                       bool record_true_cost) {
  const Vec c = dual_costs(problem, space);
  SgdRun run = config.sgd;
  run.seed = config.seed;
  run.discount = config.gamma;
  if (config.u_aware) {
    SgdRun pilot = run;
    pilot.num_rounds = config.pilot_rounds > 0 ? config.pilot_rounds : std::max<std::int64_t>(1, run.num_rounds / 10);
    pilot.seed = derive_seed(config.seed, "pilot");
    pilot.record_every = pilot.num_rounds;
    const SgdResult p = sgd_optimize(space, c, pilot);
    run.pilot_violation = constraint_violation(xi(space, p.theta_hat));
  }
  DualEvaluator true_cost;
  if (record_true_cost)
    true_cost = [&](const DualPoint& theta) { return evaluate_theta(problem, config, space, theta); };
  return sgd_optimize(space, c, run, true_cost);
}

// ---------------------------------------------------------------------------
// Entry points

int run_occupancy(const ExperimentConfig& config, const std::string& out_dir, std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    const auto dir = prepare_dir(out_dir);
    const Problem problem = build_problem(config);
    bool reused = false;
    const OccupancyCache occ = base_occupancies(problem, config, (dir / "occupancies.txt").string(), &reused);
    log << (reused ? "reused" : "wrote") << ' ' << (dir / "occupancies.txt").string() << " (X = "
        << occ.measures.front().num_states << ", A = " << occ.measures.front().num_actions
        << ", m = " << occ.measures.size() << ")\n";
    const Vec costs = base_costs(problem, config);
    for (std::size_t i = 0; i < costs.size(); ++i) log << "J(pi_" << i + 1 << ") = " << format_double(costs[i]) << '\n';
    if (occ.measures.size() >= 2) {
      const double lambda = overlap_lambda(dual_space(occ, config.sgd.radius));
      log << "overlap lambda = " << format_double(lambda) << '\n';
    }
    return kExitOk;
  });
}

namespace {

int run_hardness(const ExperimentConfig& config, const std::filesystem::path& dir, std::ostream& log) {
  const auto t0 = std::chrono::steady_clock::now();
  const Graph graph = read_edge_list_file(config.graph_file);
  const int omega = independence_number(graph);
  LatticeMinimum lm;
  try {
    lm = motzkin_straus_lattice(graph, config.lattice_resolution);
  } catch (const InvalidInput& e) {
    config.raw.fail("resolution", e.what());
  }
  const ReductionInstance inst = reduction_mdp(graph, config.gamma);

  OccupancyCache occ{hex64(hash_mdp(inst.mdp) ^ hash_text("discounted")), hex64(hash_policies(inst.basis)), {}, {}};
  for (const auto& pi : inst.basis.policies()) occ.measures.push_back(exact_occupancy(inst.mdp, pi));
  save_occupancy_cache((dir / "occupancies.txt").string(), occ);

  std::ostringstream trace;
  trace << "j,target,reachable,witness_cost\n";
  for (int j = 1; j <= graph.size(); ++j) {
    const DecisionWitness d = stable_set_decision(graph, j, config.gamma, config.lattice_resolution);
    trace << j << ',' << format_double(d.target) << ',' << (d.reachable ? 1 : 0) << ',' << format_double(d.cost) << '\n';
  }
  write_file(dir / "trace.csv", trace.str());

  Vec w(graph.size());
  for (int i = 0; i < graph.size(); ++i) w[i] = static_cast<double>(lm.counts[i]) / lm.denominator;
  const double cost = primal_objective(inst.mdp, inst.basis, project_simplex(w));
  log << "omega = " << omega << '\n';
  log << "motzkin_straus_lattice = " << format_double(lm.value) << '\n';
  log << "inverse_omega = " << format_double(1.0 / omega) << '\n';

  std::ostringstream summary;
  summary << "method = hardness\n"
          << "vertices = " << graph.size() << "\nedges = " << graph.num_edges() << "\nomega = " << omega
          << "\nmotzkin_straus_lattice = " << format_double(lm.value) << "\nobjective = " << format_double(cost)
          << "\nw = " << join(w) << "\nwall_time_s = " << format_double(seconds_since(t0)) << '\n';
  write_file(dir / "summary.txt", summary.str());
  return kExitOk;
}

}  // namespace

int run_experiment(const ExperimentConfig& config, const std::string& out_dir, std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    require_method_keys(config);
    const auto dir = prepare_dir(out_dir);
    if (config.method == Method::Hardness) return run_hardness(config, dir, log);

    const auto t0 = std::chrono::steady_clock::now();
    const Problem problem = build_problem(config);
    const OccupancyCache occ = base_occupancies(problem, config, (dir / "occupancies.txt").string());
    const int m = problem.num_policies();

    std::ostringstream trace;
    std::ostringstream summary;
    summary << "method = " << to_string(config.method) << "\nenv = " << to_string(config.env)
            << "\ncriterion = " << to_string(config.criterion) << "\nseed = " << config.seed << '\n';
    double objective = 0.0;

    switch (config.method) {
      case Method::PrimalFd: {
        MixtureWeight w0 = MixtureWeight::uniform(m);
        if (config.w0) {
          try {
            w0 = MixtureWeight(*config.w0);
          } catch (const InvalidInput& e) {
            config.raw.fail("w0", e.what());
          }
        }
        const PrimalResult r = primal_descent(primal_evaluator(problem, config), w0, config.primal);
        write_primal_trace(trace, r.trace, m);
        objective = r.best_objective;
        summary << "objective = " << format_double(objective) << "\nw = " << join(r.best.values()) << '\n';
        break;
      }
      case Method::DualSgd: {
        const DualSpace space = dual_space(occ, config.sgd.radius);
        const SgdResult r = run_dual_sgd(problem, config, space, problem.tabular());
        write_sgd_trace(trace, r.trace, m);
        objective = evaluate_theta(problem, config, space, r.theta_hat);
        const Vec x = xi(space, r.theta_hat);
        summary << "objective = " << format_double(objective) << "\ntheta = " << join(r.theta_hat.values())
                << "\nsurrogate = " << format_double(surrogate_loss(space, r.theta_hat, dual_costs(problem, space), r.params.penalty))
                << "\nviolation = " << format_double(constraint_violation(x)) << "\nH = " << format_double(r.params.penalty)
                << "\neta = " << format_double(r.params.learning_rate) << '\n';
        break;
      }
      case Method::DualGrid: {
        if (!problem.tabular()) config.raw.fail("method", "dual-grid needs a tabular environment");
        const DualSpace space = dual_space(occ, config.sgd.radius);
        std::vector<GridPoint> grid;
        try {
          grid = dual_grid_search(m, config.sgd.radius, config.grid_resolution,
                                  [&](const DualPoint& th) { return evaluate_theta(problem, config, space, th); });
        } catch (const ConfigError&) {
          throw;
        } catch (const InvalidInput& e) {
          config.raw.fail("resolution", e.what());
        }
        trace << "point,objective";
        for (int i = 0; i < m; ++i) trace << ",theta_" << i;
        trace << '\n';
        std::size_t best = 0;
        for (std::size_t k = 0; k < grid.size(); ++k) {
          trace << k << ',' << format_double(grid[k].value);
          for (double v : grid[k].theta) trace << ',' << format_double(v);
          trace << '\n';
          if (grid[k].value < grid[best].value) best = k;
        }
        objective = grid[best].value;
        summary << "objective = " << format_double(objective) << "\ntheta = " << join(grid[best].theta) << '\n';
        break;
      }
      case Method::Hardness:
        break;
    }
    write_file(dir / "trace.csv", trace.str());
    summary << "wall_time_s = " << format_double(seconds_since(t0)) << '\n';
    write_file(dir / "summary.txt", summary.str());
    log << to_string(config.method) << " on " << to_string(config.env) << ": objective = " << format_double(objective)
        << '\n';
    return kExitOk;
  });
}

int compare_methods(const ExperimentConfig& config, const std::string& out_dir, std::ostream& log, std::ostream& err) {
  return guarded(err, [&] {
    require_compare_keys(config);
    if (config.sgd.num_rounds % config.steps != 0) config.raw.fail("steps", "must divide T");
    const auto dir = prepare_dir(out_dir);
    const Problem problem = build_problem(config);
    const OccupancyCache occ = base_occupancies(problem, config, (dir / "occupancies.txt").string());
    const int m = problem.num_policies();

    PrimalDescentOptions popts = config.primal;
    popts.iterations = config.steps;
    MixtureWeight w0 = MixtureWeight::uniform(m);
    if (config.w0) {
      try {
        w0 = MixtureWeight(*config.w0);
      } catch (const InvalidInput& e) {
        config.raw.fail("w0", e.what());
      }
    }
    const PrimalResult primal = primal_descent(primal_evaluator(problem, config), w0, popts);

    ExperimentConfig dcfg = config;
    dcfg.sgd.record_every = config.sgd.num_rounds / config.steps;
    const DualSpace space = dual_space(occ, config.sgd.radius);
    const SgdResult dual = run_dual_sgd(problem, dcfg, space, true);

    std::ostringstream csv;
    csv << "step,method,objective\n";
    const Vec base = base_costs(problem, config);
    for (int i = 0; i < m; ++i) csv << "0,base_" << i + 1 << ',' << format_double(base[i]) << '\n';
    for (const auto& row : primal.trace)
      if (row.iter >= 1) csv << row.iter << ",primal," << format_double(row.objective) << '\n';
    int k = 0;
    for (const auto& row : dual.trace)
      if (row.t % dcfg.sgd.record_every == 0) csv << ++k << ",dual," << format_double(*row.true_cost) << '\n';
    write_file(dir / "compare.csv", csv.str());
    log << "primal best = " << format_double(primal.best_objective)
        << ", dual final = " << format_double(dual.trace.back().true_cost.value_or(0.0)) << '\n';
    return kExitOk;
  });
}

}  // namespace mixopt
