#include "mixopt/hardness.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <sstream>

namespace mixopt {

// ---------------------------------------------------------------------------
// Graph

Graph::Graph(int num_vertices) : m_(num_vertices) {
  if (num_vertices < 1 || num_vertices > 64) throw InvalidInput("Graph: vertex count must lie in [1, 64]");
  adj_.assign(static_cast<std::size_t>(m_) * m_, 0);
}

Graph::Graph(int num_vertices, const std::vector<std::pair<int, int>>& edges) : Graph(num_vertices) {
  for (auto [u, v] : edges) add_edge(u, v);
}

Graph Graph::complete(int m) {
  Graph g(m);
  for (int u = 0; u < m; ++u)
    for (int v = u + 1; v < m; ++v) g.add_edge(u, v);
  return g;
}

Graph Graph::cycle(int m) {
  Graph g(m);
  for (int u = 0; u < m; ++u) g.add_edge(u, (u + 1) % m);
  return g;
}

void Graph::add_edge(int u, int v) {
  if (u < 0 || v < 0 || u >= m_ || v >= m_) throw InvalidInput("Graph: vertex index out of range");
  if (u == v) throw InvalidInput("Graph: self-loops are not allowed");
  adj_[static_cast<std::size_t>(u) * m_ + v] = 1;
  adj_[static_cast<std::size_t>(v) * m_ + u] = 1;
}

int Graph::num_edges() const {
  int e = 0;
  for (auto a : adj_) e += a;
  return e / 2;
}

std::uint64_t Graph::neighbors(int u) const {
  std::uint64_t mask = 0;
  for (int v = 0; v < m_; ++v)
    if (adjacent(u, v)) mask |= std::uint64_t{1} << v;
  return mask;
}

Graph read_edge_list(std::istream& in) {
  std::string line;
  int lineno = 0;
  int m = -1;
  std::vector<std::pair<int, int>> edges;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    std::istringstream ss(line);
    std::vector<long> tokens;
    long v;
    while (ss >> v) tokens.push_back(v);
    if (!ss.eof()) throw InvalidInput("graph line " + std::to_string(lineno) + ": expected integers");
    if (tokens.empty()) continue;
    if (m < 0) {
      if (tokens.size() != 1) throw InvalidInput("graph line " + std::to_string(lineno) + ": expected the vertex count");
      m = static_cast<int>(tokens[0]);
      continue;
    }
    if (tokens.size() != 2) throw InvalidInput("graph line " + std::to_string(lineno) + ": expected `u v`");
    if (tokens[0] < 0 || tokens[1] < 0 || tokens[0] >= m || tokens[1] >= m)
      throw InvalidInput("graph line " + std::to_string(lineno) + ": vertex out of range");
    edges.emplace_back(static_cast<int>(tokens[0]), static_cast<int>(tokens[1]));
  }
  if (m < 0) throw InvalidInput("graph: missing vertex count");
  return Graph(m, edges);
}

Graph read_edge_list_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("cannot open graph file " + path);
  return read_edge_list(in);
}

// ---------------------------------------------------------------------------
// Reduction

ReductionInstance reduction_mdp(const Graph& graph, double gamma) {
  const int m = graph.size();
  const int n = m + 3;
  const int start = 0;
  const int cost_state = m + 1;
  const int sink = m + 2;
  std::vector<std::vector<Transition>> rows(static_cast<std::size_t>(n) * n);
  auto row = [&](int x, int a) -> std::vector<Transition>& { return rows[static_cast<std::size_t>(x) * n + a]; };
  for (int x = 0; x < n; ++x)
    for (int a = 0; a < n; ++a) row(x, a) = {{sink, 1.0}};
  for (int i = 0; i < m; ++i) {
    row(start, i) = {{1 + i, 1.0}};
    for (int k = 0; k < m; ++k) {
      // (I + G)(k, i) is 0 or 1, so the block row is deterministic
      const bool hit = k == i || graph.adjacent(k, i);
      row(1 + k, i) = {{hit ? cost_state : sink, 1.0}};
    }
  }
  Vec cost(static_cast<std::size_t>(n) * n, 0.0);
  for (int a = 0; a < n; ++a) cost[static_cast<std::size_t>(cost_state) * n + a] = 1.0;
  Vec alpha(n, 0.0);
  alpha[start] = 1.0;

  std::vector<StationaryPolicy> policies;
  for (int i = 0; i < m; ++i) policies.push_back(StationaryPolicy::deterministic(n, std::vector<int>(n, i)));
  return {TabularMdp(n, n, std::move(cost), std::move(rows), std::move(alpha), gamma), PolicyBasis(std::move(policies))};
}

double mixture_cost_closed_form(const Graph& graph, const Vec& w, double gamma) {
  const int m = graph.size();
  if (static_cast<int>(w.size()) != m) throw InvalidInput("mixture_cost_closed_form: weight length mismatch");
  double q = 0.0;
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j)
      if (i == j || graph.adjacent(i, j)) q += w[i] * w[j];
  return (1.0 - gamma) * gamma * gamma * q;
}

// ---------------------------------------------------------------------------
// Stable sets

int independence_number(const Graph& graph) {
  const int m = graph.size();
  if (m > 20) throw InvalidInput("independence_number: brute force limited to m <= 20");
  std::vector<std::uint64_t> nbr(m);
  for (int u = 0; u < m; ++u) nbr[u] = graph.neighbors(u);
  int best = 0;
  auto search = [&](auto&& self, std::uint64_t candidates, int size) -> void {
    if (candidates == 0) {
      best = std::max(best, size);
      return;
    }
    if (size + std::popcount(candidates) <= best) return;
    const int v = std::countr_zero(candidates);
    const std::uint64_t bit = std::uint64_t{1} << v;
    self(self, candidates & ~bit & ~nbr[v], size + 1);
    self(self, candidates & ~bit, size);
  };
  const std::uint64_t all = m == 64 ? ~std::uint64_t{0} : (std::uint64_t{1} << m) - 1;
  search(search, all, 0);
  return best;
}

LatticeMinimum motzkin_straus_lattice(const Graph& graph, double resolution) {
  const int m = graph.size();
  if (m > 8) throw InvalidInput("motzkin_straus_min: lattice search limited to m <= 8");
  if (!(resolution > 0.0 && resolution <= 1.0)) throw InvalidInput("motzkin_straus_min: resolution must lie in (0, 1]");
  const long steps = std::lround(1.0 / resolution);
  if (std::abs(static_cast<double>(steps) * resolution - 1.0) > 1e-9)
    throw InvalidInput("motzkin_straus_min: 1 / resolution must be an integer");
  const int N = static_cast<int>(steps);

  // Q(n) = sum n_i^2 + sum_{i != j} G_ij n_i n_j, built coordinate by
  // coordinate; lin[j] holds 2 sum_{i < j assigned} G_ij n_i.
  std::vector<std::int64_t> lin(m, 0);
  std::vector<int> n(m, 0);
  std::vector<int> best_n(m, 0);
  std::int64_t best = std::numeric_limits<std::int64_t>::max();
  std::vector<std::vector<int>> later_nbrs(m);
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j)
      if (graph.adjacent(i, j)) later_nbrs[i].push_back(j);

  auto enumerate = [&](auto&& self, int i, int remaining, std::int64_t partial) -> void {
    if (i == m - 1) {
      const std::int64_t q = partial + std::int64_t{remaining} * remaining + std::int64_t{remaining} * lin[i];
      if (q < best) {
        best = q;
        n[i] = remaining;
        best_n = n;
      }
      return;
    }
    for (int v = 0; v <= remaining; ++v) {
      n[i] = v;
      self(self, i + 1, remaining - v, partial + std::int64_t{v} * v + std::int64_t{v} * lin[i]);
      for (int j : later_nbrs[i]) lin[j] += 2;
    }
    for (int j : later_nbrs[i]) lin[j] -= 2 * static_cast<std::int64_t>(remaining + 1);
    n[i] = 0;
  };
  enumerate(enumerate, 0, N, 0);
  const double denom = static_cast<double>(N) * N;
  return {static_cast<double>(best) / denom, best_n, best, N};
}

double motzkin_straus_min(const Graph& graph, double resolution) {
  return motzkin_straus_lattice(graph, resolution).value;
}

DecisionWitness stable_set_decision(const Graph& graph, int j, double gamma, double resolution) {
  if (j < 1 || j > graph.size()) throw InvalidInput("stable_set_decision: target j must lie in [1, m]");
  const LatticeMinimum lm = motzkin_straus_lattice(graph, resolution);
  const double target = (1.0 - gamma) * gamma * gamma / j;
  // w^T A w <= 1/j  <=>  j * numerator <= N^2, decided without rounding
  const bool reachable = std::int64_t{j} * lm.numerator <= std::int64_t{lm.denominator} * lm.denominator;
  Vec w(graph.size());
  for (int i = 0; i < graph.size(); ++i) w[i] = static_cast<double>(lm.counts[i]) / lm.denominator;
  const ReductionInstance inst = reduction_mdp(graph, gamma);
  const double cost = primal_objective(inst.mdp, inst.basis, project_simplex(w));
  return {reachable, std::move(w), cost, target};
}

std::vector<Graph> graphs_up_to_isomorphism(int m) {
  if (m < 1 || m > 6) throw InvalidInput("graphs_up_to_isomorphism: m must lie in [1, 6]");
  std::vector<std::pair<int, int>> edge_list;
  std::vector<std::vector<int>> edge_id(m, std::vector<int>(m, -1));
  for (int u = 0; u < m; ++u)
    for (int v = u + 1; v < m; ++v) {
      edge_id[u][v] = edge_id[v][u] = static_cast<int>(edge_list.size());
      edge_list.emplace_back(u, v);
    }
  const int num_edges = static_cast<int>(edge_list.size());

  // edge permutation induced by every vertex permutation
  std::vector<std::vector<int>> edge_perms;
  std::vector<int> perm(m);
  std::iota(perm.begin(), perm.end(), 0);
  do {
    std::vector<int> ep(num_edges);
    for (int e = 0; e < num_edges; ++e) ep[e] = edge_id[perm[edge_list[e].first]][perm[edge_list[e].second]];
    edge_perms.push_back(std::move(ep));
  } while (std::next_permutation(perm.begin(), perm.end()));

  std::vector<Graph> out;
  const std::uint32_t limit = std::uint32_t{1} << num_edges;
  for (std::uint32_t code = 0; code < limit; ++code) {
    bool canonical = true;
    for (const auto& ep : edge_perms) {
      std::uint32_t image = 0;
      for (int e = 0; e < num_edges; ++e)
        if (code >> e & 1U) image |= std::uint32_t{1} << ep[e];
      if (image < code) {
        canonical = false;
        break;
      }
    }
    if (!canonical) continue;
    Graph g(m);
    for (int e = 0; e < num_edges; ++e)
      if (code >> e & 1U) g.add_edge(edge_list[e].first, edge_list[e].second);
    out.push_back(std::move(g));
  }
  return out;
}

}  // namespace mixopt
