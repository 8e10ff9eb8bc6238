#include <cmath>
#include <limits>

#include "doctest.h"
#include "mixopt/dual.hpp"
#include "mixopt/kernels.hpp"
#include "mixopt/mixture.hpp"
#include "support.hpp"

using namespace mixopt;

namespace {

DualSpace two_column_space(Vec a, Vec b, double radius) {
  const int n = static_cast<int>(a.size());
  Vec m = a;
  m.insert(m.end(), b.begin(), b.end());
  return DualSpace(1, n, 2, m, radius);
}

struct Instance {
  TabularMdp mdp;
  PolicyBasis basis;
  DualSpace space;
};

Instance random_instance(int X, int A, int m, double gamma, std::uint64_t seed, double radius) {
  auto mdp = support::random_mdp(X, A, gamma, seed, 0.3);
  std::vector<StationaryPolicy> pols;
  std::vector<OccupancyMeasure> occ;
  for (int i = 0; i < m; ++i) {
    pols.push_back(support::random_policy(X, A, seed * 13 + i, 0.3));
    occ.push_back(exact_occupancy(mdp, pols.back()));
  }
  DualSpace space(occ, radius);
  return {std::move(mdp), PolicyBasis(std::move(pols)), std::move(space)};
}

Vec random_theta(int m, double radius, Engine& rng) {
  Vec v(m);
  for (double& x : v) x = 2.0 * radius * uniform01(rng) - radius;
  return project_theta(v, radius).values();
}

}  // namespace

TEST_CASE("xi") {
  const auto s1 = two_column_space({1, 0}, {0, 1}, 2.0);
  const Vec x1 = xi(s1, DualPoint({0.5, 0.5}, 2.0));
  CHECK(x1 == Vec{0.5, 0.5});
  const auto s2 = two_column_space({0.6, 0.4}, {0.4, 0.6}, 2.0);
  const Vec x2 = xi(s2, DualPoint({1.5, -0.5}, 2.0));
  CHECK(x2[0] == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(x2[1] == doctest::Approx(0.3).epsilon(1e-15));
  const Vec e1 = xi(s2, DualPoint::vertex(2, 1, 1.0));
  CHECK(e1 == Vec{0.4, 0.6});

  Engine rng = support::engine(1);
  const auto inst = random_instance(6, 3, 4, 0.9, 2, 3.0);
  for (int k = 0; k < 20; ++k) {
    const Vec th = random_theta(4, 3.0, rng);
    const Vec x = xi(inst.space, DualPoint(th, 3.0));
    double s = 0.0;
    for (double v : x) s += v;
    CHECK(std::abs(s - 1.0) < 1e-9);
    // matrix-multiply oracle
    for (std::size_t r = 0; r < x.size(); ++r) {
      double ref = 0.0;
      for (int i = 0; i < 4; ++i) ref += inst.space.at(r, i) * th[i];
      CHECK(std::abs(ref - x[r]) < 1e-14);
    }
  }
}

TEST_CASE("DualPoint and DualSpace validation") {
  CHECK_THROWS_AS(DualPoint({0.5, 0.4}, 2.0), InvalidInput);
  CHECK_THROWS_AS(DualPoint({3.0, -2.0}, 2.0), InvalidInput);
  CHECK_THROWS_AS(two_column_space({1, 0}, {0, 1}, 0.5), InvalidInput);
  CHECK_THROWS_AS(two_column_space({0.9, 0}, {0, 1}, 1.0), InvalidInput);
  CHECK_NOTHROW(two_column_space({1, 0}, {0, 1}, 1.0 / std::sqrt(2.0)));
}

TEST_CASE("policy extraction") {
  SUBCASE("positive part") {
    const auto p = extract_policy(Vec{0.2, -0.1}, 1, 2);
    CHECK(p(0, 0) == 1.0);
    CHECK(p(0, 1) == 0.0);
  }
  SUBCASE("uniform fallback when nothing is strictly positive") {
    const auto p = extract_policy(Vec{-0.3, 0.0, -0.1}, 1, 3);
    for (int a = 0; a < 3; ++a) CHECK(p(0, a) == doctest::Approx(1.0 / 3.0));
  }
  SUBCASE("base occupancies recover the base policy on their support") {
    const auto inst = random_instance(7, 3, 3, 0.9, 5, 2.0);
    for (int i = 0; i < 3; ++i) {
      const auto occ = exact_occupancy(inst.mdp, inst.basis[i]);
      const auto p = extract_policy(occ.state_action, 7, 3);
      for (int x = 0; x < 7; ++x) {
        if (occ.state[x] <= 1e-14) continue;
        for (int a = 0; a < 3; ++a) CHECK(std::abs(p(x, a) - inst.basis[i](x, a)) < 1e-10);
      }
      CHECK(std::abs(dual_objective(inst.mdp, inst.space, DualPoint::vertex(3, i, 2.0), Criterion::Discounted) -
                     policy_value(inst.mdp, inst.basis[i])) < 1e-10);
    }
  }
}

TEST_CASE("constraint violation and surrogate loss") {
  CHECK(constraint_violation(Vec{0.7, -0.2, 0.5}) == doctest::Approx(0.2));
  CHECK(constraint_violation(Vec{0.0, 1.0}) == 0.0);

  // direct arithmetic on the example vector: c^T xi = 1, U = 0.2, H = 10
  const Vec x{0.7, -0.2, 0.5};
  const Vec c{1, 1, 1};
  CHECK(kernels::dot(c, x) + 10.0 * constraint_violation(x) == doctest::Approx(3.0));

  const auto inst = random_instance(5, 2, 3, 0.9, 8, 3.0);
  const Vec& cost = inst.mdp.costs();
  Engine rng = support::engine(8);
  SUBCASE("simplex points have no penalty") {
    for (int k = 0; k < 20; ++k) {
      const Vec w = support::random_distribution(3, rng);
      const DualPoint th(w, 3.0);
      CHECK(constraint_violation(xi(inst.space, th)) == 0.0);
      double lin = 0.0;
      for (int i = 0; i < 3; ++i) lin += w[i] * policy_value(inst.mdp, inst.basis[i]);
      CHECK(std::abs(surrogate_loss(inst.space, th, cost, 50.0) - lin) < 1e-12);
    }
  }
  SUBCASE("convex on 10^4 random pairs") {
    for (int k = 0; k < 10000; ++k) {
      const Vec a = random_theta(3, 3.0, rng);
      const Vec b = random_theta(3, 3.0, rng);
      Vec mid(3);
      for (int i = 0; i < 3; ++i) mid[i] = 0.5 * (a[i] + b[i]);
      const double H = 0.5 + 20.0 * uniform01(rng);
      const double lm = surrogate_loss_unchecked(inst.space, mid, cost, H);
      const double la = surrogate_loss_unchecked(inst.space, a, cost, H);
      const double lb = surrogate_loss_unchecked(inst.space, b, cost, H);
      CHECK(lm <= 0.5 * (la + lb) + 1e-12);
    }
  }
}

TEST_CASE("exact subgradient") {
  const auto inst = random_instance(5, 3, 3, 0.9, 9, 3.0);
  const Vec& c = inst.mdp.costs();
  const Vec mc = inst.space.project_costs(c);
  SUBCASE("no active penalty on the simplex") {
    const Vec g = exact_surrogate_subgradient(inst.space, DualPoint({0.2, 0.3, 0.5}, 3.0), c, 7.0);
    for (int i = 0; i < 3; ++i) CHECK(g[i] == doctest::Approx(mc[i]).epsilon(1e-14));
  }
  SUBCASE("m = 1 over two pairs matches finite differences") {
    const DualSpace s(1, 2, 1, Vec{0.25, 0.75}, 1.0);
    const Vec c2{2.0, -1.0};
    const double h = 1e-6;
    for (double t : {-0.7, 0.4, 1.3}) {
      const double fd = (surrogate_loss_unchecked(s, Vec{t + h}, c2, 3.0) - surrogate_loss_unchecked(s, Vec{t - h}, c2, 3.0)) /
                        (2 * h);
      // the analytic form does not need a feasible point; build it from the rows
      double g = 0.25 * 2.0 + 0.75 * -1.0;
      if (t < 0) g -= 3.0 * (0.25 + 0.75);
      CHECK(std::abs(fd - g) < 1e-6);
    }
  }
  SUBCASE("finite-difference agreement at 100 random points away from kinks") {
    Engine rng = support::engine(10);
    int tested = 0;
    while (tested < 100) {
      const Vec th = random_theta(3, 3.0, rng);
      const Vec x = combine(inst.space, th);
      bool near_kink = false;
      for (std::size_t r = 0; r < x.size(); ++r) near_kink |= inst.space.row_mass(r) > 0.0 && std::abs(x[r]) < 1e-8;
      if (near_kink) continue;
      const double H = 5.0;
      const Vec g = exact_surrogate_subgradient(inst.space, DualPoint(th, 3.0), c, H);
      const double h = 1e-9;
      for (int i = 0; i < 3; ++i) {
        Vec up = th, dn = th;
        up[i] += h;
        dn[i] -= h;
        const double fd =
            (surrogate_loss_unchecked(inst.space, up, c, H) - surrogate_loss_unchecked(inst.space, dn, c, H)) / (2 * h);
        CHECK(std::abs(fd - g[i]) < 1e-6);
      }
      ++tested;
    }
  }
}

TEST_CASE("stochastic subgradient") {
  const auto inst = random_instance(6, 2, 3, 0.9, 12, 4.0);
  const Vec& c = inst.mdp.costs();
  const Vec mc = inst.space.project_costs(c);
  SUBCASE("indicator off returns M^T c exactly") {
    const Vec th{0.3, 0.3, 0.4};
    for (std::size_t r = 0; r < inst.space.rows(); ++r) {
      if (inst.space.row_mass(r) <= 0.0) continue;
      CHECK(stochastic_subgradient(inst.space, th, r, mc, 9.0) == mc);
    }
  }
  SUBCASE("m = 1 always gives J(pi_1)") {
    const auto occ = exact_occupancy(inst.mdp, inst.basis[0]);
    const DualSpace one({occ}, 1.0);
    const Vec proj = one.project_costs(c);
    const MixtureSampler sampler(one);
    Engine rng(3);
    for (int k = 0; k < 100; ++k) {
      const Vec g = stochastic_subgradient(one, Vec{1.0}, sampler.sample_row(rng), proj, 4.0);
      CHECK(g[0] == doctest::Approx(policy_value(inst.mdp, inst.basis[0])).epsilon(1e-12));
    }
  }
  SUBCASE("unbiased within three standard errors") {
    const DualPoint th = project_theta({2.5, -1.0, -0.5}, 4.0);
    const Vec x = xi(inst.space, th);
    int neg = 0;
    for (double v : x) neg += v < 0.0;
    REQUIRE(neg > 0);
    const double H = 6.0;
    const Vec exact = exact_surrogate_subgradient(inst.space, th, c, H);
    const MixtureSampler sampler(inst.space);
    Engine rng = make_stream(77, "unbiased");
    const int n = 100000;
    Vec sum(3, 0.0), sq(3, 0.0);
    for (int k = 0; k < n; ++k) {
      const Vec g = stochastic_subgradient(inst.space, th.values(), sampler.sample_row(rng), mc, H);
      for (int i = 0; i < 3; ++i) {
        sum[i] += g[i];
        sq[i] += g[i] * g[i];
      }
    }
    for (int i = 0; i < 3; ++i) {
      const double mean = sum[i] / n;
      const double sd = std::sqrt(std::max(sq[i] / n - mean * mean, 0.0));
      CHECK(std::abs(mean - exact[i]) <= 3.0 * sd / std::sqrt(double(n)));
    }
  }
}

TEST_CASE("projection onto Theta") {
  SUBCASE("examples") {
    const Vec feasible{0.2, 0.3, 0.5};
    CHECK(support::linf(project_theta(feasible, 2.0).values(), feasible) < 1e-15);
    const auto a = project_theta({2.0, 0.0}, 10.0);
    CHECK(a[0] == doctest::Approx(1.5));
    CHECK(a[1] == doctest::Approx(-0.5));
    const auto b = project_theta({3.0, -1.0}, 1.0);
    CHECK(b[0] == doctest::Approx(1.0));
    CHECK(std::abs(b[1]) < 1e-12);
    CHECK_THROWS_AS(project_theta({1.0, 0.0, 0.0}, 0.5), InvalidInput);
  }
  SUBCASE("grid search over the feasible chord") {
    Engine rng = support::engine(20);
    for (int trial = 0; trial < 30; ++trial) {
      const double S = 0.75 + 2.0 * uniform01(rng);
      const Vec v{6 * uniform01(rng) - 3, 6 * uniform01(rng) - 3};
      // theta = (t, 1 - t), feasible when t^2 + (1-t)^2 <= S^2
      double best = 1e300, best_t = 0;
      for (int k = -400000; k <= 400000; ++k) {
        const double t = k * 1e-5;
        if (t * t + (1 - t) * (1 - t) > S * S) continue;
        const double d = (t - v[0]) * (t - v[0]) + (1 - t - v[1]) * (1 - t - v[1]);
        if (d < best) best = d, best_t = t;
      }
      CHECK(std::abs(project_theta(v, S)[0] - best_t) < 2e-5);
    }
  }
  SUBCASE("feasible, idempotent and non-expansive on 10^4 pairs") {
    Engine rng = support::engine(21);
    for (int trial = 0; trial < 10000; ++trial) {
      const int m = 1 + trial % 6;
      const double S = 1.0 / std::sqrt(double(m)) + 3.0 * uniform01(rng);
      Vec u(m), v(m);
      for (int i = 0; i < m; ++i) {
        u[i] = 10 * uniform01(rng) - 5;
        v[i] = 10 * uniform01(rng) - 5;
      }
      const Vec pu = project_theta(u, S).values();
      const Vec pv = project_theta(v, S).values();
      double s = 0, n2 = 0;
      for (double x : pu) s += x, n2 += x * x;
      CHECK(std::abs(s - 1.0) < 1e-9);
      CHECK(std::sqrt(n2) <= S + 1e-9);
      CHECK(support::linf(project_theta(pu, S).values(), pu) < 1e-12);
      double dp = 0, d = 0;
      for (int i = 0; i < m; ++i) dp += (pu[i] - pv[i]) * (pu[i] - pv[i]), d += (u[i] - v[i]) * (u[i] - v[i]);
      CHECK(std::sqrt(dp) <= std::sqrt(d) + 1e-12);
    }
  }
}

TEST_CASE("stochastic subgradient descent") {
  SUBCASE("m = 1") {
    const auto inst = random_instance(4, 2, 1, 0.9, 30, 1.0);
    SgdRun run;
    run.num_rounds = 50;
    run.radius = 1.0;
    const auto r = sgd_optimize(inst.space, inst.mdp.costs(), run);
    CHECK(r.theta_hat[0] == doctest::Approx(1.0).epsilon(1e-15));
  }
  SUBCASE("three-state toy reaches the grid minimum of L") {
    const auto inst = random_instance(3, 2, 2, 0.8, 31, 3.0);
    const Vec& c = inst.mdp.costs();
    SgdRun run;
    run.num_rounds = 40000;
    run.radius = 3.0;
    run.seed = 4;
    run.penalty = 10.0;
    const auto r = sgd_optimize(inst.space, c, run);
    const double H = r.params.penalty;
    double best = std::numeric_limits<double>::infinity();
    const double tmax = (1 + std::sqrt(2 * 9.0 - 1)) / 2;  // t^2 + (1-t)^2 = S^2
    for (double t = 1 - tmax; t <= tmax; t += 1e-3) best = std::min(best, surrogate_loss_unchecked(inst.space, Vec{t, 1 - t}, c, H));
    const double got = surrogate_loss(inst.space, r.theta_hat, c, H);
    CHECK(got >= best - 1e-9);
    CHECK(got - best <= 0.02 * (inst.mdp.cost_max() - inst.mdp.cost_min()));
    CHECK(r.max_gradient_norm <= r.gradient_bound + 1e-9);
  }
  SUBCASE("deterministic, feasible output and trace layout") {
    const auto inst = random_instance(5, 2, 3, 0.9, 32, 2.0);
    SgdRun run;
    run.num_rounds = 1000;
    run.radius = 2.0;
    run.seed = 11;
    run.record_every = 100;
    const auto a = sgd_optimize(inst.space, inst.mdp.costs(), run);
    const auto b = sgd_optimize(inst.space, inst.mdp.costs(), run);
    CHECK(a.theta_hat.values() == b.theta_hat.values());
    REQUIRE(a.trace.size() == b.trace.size());
    for (std::size_t k = 0; k < a.trace.size(); ++k) CHECK(a.trace[k].theta == b.trace[k].theta);
    CHECK(a.trace.size() == 11);  // t = 1, 100, ..., 1000
    CHECK(a.trace.front().t == 1);
    CHECK(a.trace.back().t == 1000);
    double s = 0, n2 = 0;
    for (double v : a.theta_hat.values()) s += v, n2 += v * v;
    CHECK(std::abs(s - 1) < 1e-9);
    CHECK(std::sqrt(n2) <= 2.0 + 1e-9);
    CHECK(a.trace.front().theta == Vec(3, 1.0 / 3.0));
  }
  SUBCASE("default parameters") {
    SgdRun run;
    run.num_rounds = 10000;
    run.radius = 2.0;
    run.confidence = 0.05;
    const auto p = resolve_parameters(run, 4);
    const double eta = 2.0 * std::sqrt(std::log(20.0)) / 100.0;
    CHECK(p.accuracy == doctest::Approx(eta));
    CHECK(p.penalty == doctest::Approx(1.0 / eta));
    CHECK(p.gradient_scale == doctest::Approx(2.0 + 4.0 / eta));
    CHECK(p.learning_rate == doctest::Approx(2.0 / (p.gradient_scale * 100.0)));
    CHECK(p.record_every == 100);
    run.pilot_violation = 0.01;
    run.discount = 0.9;
    CHECK(resolve_parameters(run, 4).accuracy == doctest::Approx(std::sqrt(0.1 * 0.01)));
  }
}

TEST_CASE("overlap lambda") {
  CHECK(overlap_lambda(two_column_space({0.5, 0.5}, {0.5, 0.5}, 2.0)) == kUnboundedOverlap);
  CHECK(overlap_lambda(two_column_space({1.0, 0.0}, {0.0, 1.0}, 2.0)) == 0.0);
  CHECK(overlap_lambda(two_column_space({0.6, 0.4}, {0.4, 0.6}, 2.0)) == doctest::Approx(2.0));

  SUBCASE("U vanishes at the overlap point") {
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
      auto mdp = support::random_mdp(5, 2, 0.9, 40 + seed);
      std::vector<OccupancyMeasure> occ;
      for (int i = 0; i < 3; ++i) occ.push_back(exact_occupancy(mdp, support::random_policy(5, 2, 60 + seed * 3 + i)));
      const double S0 = 10.0;
      const DualSpace probe(occ, S0);
      const double lambda = overlap_lambda(probe);
      REQUIRE(lambda > 0.0);
      const double S = std::max(S0, std::sqrt((1 + lambda) * (1 + lambda) + lambda * lambda) + 1e-6);
      const DualSpace space(occ, S);
      const Vec th{1 + lambda, 0.0, -lambda};
      // entries with the exact ratio can land at -1 ulp; compare against round-off scale
      CHECK(constraint_violation(combine(space, th)) <= 1e-15);
    }
  }
}

TEST_CASE("dual objective with constant cost") {
  auto inst = random_instance(4, 2, 2, 0.9, 50, 2.0);
  Vec trans;
  for (int x = 0; x < 4; ++x)
    for (int a = 0; a < 2; ++a)
      for (int y = 0; y < 4; ++y) trans.push_back(inst.mdp.probability(x, a, y));
  const TabularMdp flat(4, 2, Vec(8, 1.0), trans, inst.mdp.initial(), 0.9);
  CHECK(dual_objective(flat, inst.space, DualPoint({1.7, -0.7}, 2.0)) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("mixture occupancy stays within the base-policy spread") {
  Engine rng = support::engine(70);
  for (int trial = 0; trial < 100; ++trial) {
    const int X = 2 + trial % 8, A = 1 + trial % 3, m = 2 + trial % 3;
    const double gamma = trial % 2 ? 0.9 : 0.6;
    const auto mdp = support::random_mdp(X, A, gamma, 1000 + trial, 0.3);
    std::vector<StationaryPolicy> pols;
    std::vector<Vec> nu;
    for (int i = 0; i < m; ++i) {
      pols.push_back(support::random_policy(X, A, 2000 + trial * 5 + i, 0.3));
      nu.push_back(exact_occupancy(mdp, pols.back()).state);
    }
    double eps = 0.0;
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) eps = std::max(eps, support::l1(nu[i], nu[j]));
    const PolicyBasis basis(pols);
    const Vec w = support::random_distribution(m, rng);
    const Vec nw = exact_occupancy(mdp, mix_policies(basis, MixtureWeight(w))).state;
    for (int i = 0; i < m; ++i) CHECK(support::l1(nu[i], nw) <= eps * (1 + gamma) / (1 - gamma) + 1e-9);
  }
}

TEST_CASE("dual grid search") {
  const auto pts = dual_grid_search(2, 1.0, 0.1, [](const DualPoint& p) { return p[0]; });
  double lo = 1e9, hi = -1e9;
  for (const auto& g : pts) {
    lo = std::min(lo, g.value);
    hi = std::max(hi, g.value);
    CHECK(std::abs(g.theta[0] + g.theta[1] - 1.0) < 1e-12);
  }
  // the feasible chord for S = 1 is t in [0, 1]
  CHECK(lo >= -1e-9);
  CHECK(hi <= 1.0 + 1e-9);
  CHECK(lo < 0.1);
  CHECK(hi > 0.9);
  CHECK_THROWS_AS(dual_grid_search(6, 5.0, 1e-3, [](const DualPoint&) { return 0.0; }), InvalidInput);
}
