#include "mixopt/mixture.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>
#include <string>

namespace mixopt {

PolicyBasis::PolicyBasis(std::vector<StationaryPolicy> policies) : policies_(std::move(policies)) {
  if (policies_.empty()) throw InvalidInput("PolicyBasis: need at least one policy");
  for (const auto& p : policies_)
    if (p.num_states() != num_states() || p.num_actions() != num_actions())
      throw InvalidInput("PolicyBasis: base policies disagree on dimensions");
}

MixtureWeight::MixtureWeight(Vec w) : w_(std::move(w)), simplex_(true) {
  if (w_.empty()) throw InvalidInput("MixtureWeight: empty");
  double sum = 0.0;
  for (double v : w_) {
    if (!(v >= 0.0)) throw InvalidInput("MixtureWeight: negative weight on the simplex");
    sum += v;
  }
  if (std::abs(sum - 1.0) > kProbTol) throw InvalidInput("MixtureWeight: weights do not sum to 1");
}

MixtureWeight MixtureWeight::unchecked(Vec w) {
  if (w.empty()) throw InvalidInput("MixtureWeight: empty");
  return MixtureWeight(std::move(w), false);
}

MixtureWeight MixtureWeight::vertex(int m, int i) {
  Vec w(m, 0.0);
  w.at(i) = 1.0;
  return MixtureWeight(std::move(w));
}

MixtureWeight MixtureWeight::uniform(int m) { return MixtureWeight(Vec(m, 1.0 / m)); }

StationaryPolicy mix_policies(const PolicyBasis& basis, const MixtureWeight& w) {
  if (w.size() != basis.size()) throw InvalidInput("mix_policies: weight length does not match the basis");
  const int n = basis.num_states();
  const int na = basis.num_actions();
  Vec probs(static_cast<std::size_t>(n) * na, 0.0);
  for (int i = 0; i < basis.size(); ++i) {
    if (w[i] == 0.0) continue;
    const Vec& src = basis[i].probs();
    for (std::size_t k = 0; k < probs.size(); ++k) probs[k] += w[i] * src[k];
  }
  if (!w.on_simplex()) {
    for (int x = 0; x < n; ++x) {
      double sum = 0.0;
      for (int a = 0; a < na; ++a) {
        double& p = probs[static_cast<std::size_t>(x) * na + a];
        if (p < -kProbTol) throw InvalidInput("mix_policies: negative probability at state " + std::to_string(x));
        p = std::max(p, 0.0);
        sum += p;
      }
      if (std::abs(sum - 1.0) > kProbTol)
        throw InvalidInput("mix_policies: row sum != 1 at state " + std::to_string(x));
    }
  }
  return {n, na, std::move(probs)};
}

double primal_objective(const TabularMdp& mdp, const PolicyBasis& basis, const MixtureWeight& w,
                        Criterion criterion) {
  return policy_cost(mdp, mix_policies(basis, w), criterion);
}

MixtureWeight project_simplex(const Vec& v) {
  if (v.empty()) throw InvalidInput("project_simplex: empty vector");
  Vec u = v;
  std::sort(u.begin(), u.end(), std::greater<>());
  double cumsum = 0.0;
  double tau = 0.0;
  for (std::size_t j = 0; j < u.size(); ++j) {
    cumsum += u[j];
    const double t = (cumsum - 1.0) / static_cast<double>(j + 1);
    if (u[j] - t > 0.0) tau = t;
  }
  Vec w(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) w[i] = std::max(v[i] - tau, 0.0);
  // renormalize away the last-bit drift of the threshold
  const double s = std::accumulate(w.begin(), w.end(), 0.0);
  for (double& x : w) x /= s;
  return MixtureWeight(std::move(w));
}

MixtureEvaluator exact_evaluator(const TabularMdp& mdp, const PolicyBasis& basis, Criterion criterion) {
  return [&mdp, &basis, criterion](const MixtureWeight& w) { return primal_objective(mdp, basis, w, criterion); };
}

ActionRule mixture_rule(std::vector<ActionRule> rules, const MixtureWeight& w) {
  if (static_cast<int>(rules.size()) != w.size()) throw InvalidInput("mixture_rule: size mismatch");
  Vec cum(w.size());
  double acc = 0.0;
  for (int i = 0; i < w.size(); ++i) {
    acc += std::max(w[i], 0.0);
    cum[i] = acc;
  }
  return [rules = std::move(rules), cum = std::move(cum)](StateKey s, Engine& rng) {
    const double u = uniform01(rng) * cum.back();
    std::size_t i = std::upper_bound(cum.begin(), cum.end(), u) - cum.begin();
    if (i == cum.size()) i = cum.size() - 1;
    while (i > 0 && cum[i] == cum[i - 1]) --i;  // never land on a zero-weight rule
    return rules[i](s, rng);
  };
}

MixtureEvaluator simulated_evaluator(const ForwardSimulator& sim, std::vector<ActionRule> rules,
                                     std::int64_t horizon, std::uint64_t seed) {
  return [&sim, rules = std::move(rules), horizon, seed](const MixtureWeight& w) {
    return simulate_average_cost(sim, mixture_rule(rules, w), horizon, seed).mean;
  };
}

Vec finite_difference_gradient(const MixtureEvaluator& evaluate, const MixtureWeight& w, double step) {
  if (!(step > 0.0)) throw InvalidInput("finite_difference_gradient: step must be positive");
  const int m = w.size();
  Vec grad(m, 0.0);
  for (int i = 0; i < m; ++i) {
    Vec plus = w.values();
    Vec minus = w.values();
    plus[i] += step;
    minus[i] -= step;
    try {
      grad[i] = (evaluate(project_simplex(plus)) - evaluate(project_simplex(minus))) / (2.0 * step);
    } catch (const std::exception& e) {
      throw NumericalError("finite_difference_gradient: evaluation failed at coordinate " + std::to_string(i) +
                           ": " + e.what());
    }
  }
  return grad;
}

PrimalResult primal_descent(const MixtureEvaluator& evaluate, const MixtureWeight& w0,
                            const PrimalDescentOptions& opts) {
  if (opts.iterations < 1) throw InvalidInput("primal_descent: iterations must be >= 1");
  if (!(opts.step_size > 0.0)) throw InvalidInput("primal_descent: step size must be positive");
  MixtureWeight w = w0.on_simplex() ? w0 : project_simplex(w0.values());
  double f = evaluate(w);
  PrimalResult result{w, f, {}};
  result.trace.push_back({0, f, w.values()});
  for (int t = 1; t <= opts.iterations; ++t) {
    const Vec g = finite_difference_gradient(evaluate, w, opts.fd_step);
    const double eta =
        opts.schedule == StepSchedule::Constant ? opts.step_size : opts.step_size / std::sqrt(static_cast<double>(t));
    Vec next = w.values();
    for (int i = 0; i < w.size(); ++i) next[i] -= eta * g[i];
    w = project_simplex(next);
    f = evaluate(w);
    result.trace.push_back({t, f, w.values()});
    if (f < result.best_objective) {
      result.best_objective = f;
      result.best = w;
    }
  }
  return result;
}

}  // namespace mixopt
