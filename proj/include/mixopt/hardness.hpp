#pragma once

#include <cstdint>
#include <istream>
#include <string>
#include <utility>
#include <vector>

#include "mixopt/mdp.hpp"
#include "mixopt/mixture.hpp"

// Executable form of the reduction from maximum stable set to mixture-policy
// optimization: a graph becomes an (m+3)-state deterministic MDP whose
// mixture cost is (1 - gamma) gamma^2 w^T (I + G) w.

namespace mixopt {

/// Simple undirected graph, symmetric 0-1 adjacency with zero diagonal.
class Graph {
 public:
  explicit Graph(int num_vertices);
  Graph(int num_vertices, const std::vector<std::pair<int, int>>& edges);

  static Graph complete(int m);
  static Graph cycle(int m);

  int size() const { return m_; }
  bool adjacent(int u, int v) const { return adj_[static_cast<std::size_t>(u) * m_ + v] != 0; }
  void add_edge(int u, int v);
  int num_edges() const;
  /// Neighbor set of u as a bitmask (m <= 64).
  std::uint64_t neighbors(int u) const;

 private:
  int m_;
  std::vector<std::uint8_t> adj_;
};

/// Edge-list text: first token m, then 0-indexed `u v` pairs.
Graph read_edge_list(std::istream& in);
Graph read_edge_list_file(const std::string& path);

struct ReductionInstance {
  TabularMdp mdp;
  PolicyBasis basis;
};

/**
 * States: 0 start, 1..m one per vertex, m+1 the unit-cost state, m+2
 * absorbing. Action i < m at the start state moves to vertex i; at vertex k
 * it moves to the cost state w.p. (I+G)(k, i) and to the absorbing state
 * otherwise. Every other (state, action) pair routes to the absorbing
 * state. Base policy i plays action i everywhere; alpha = e_0.
 */
ReductionInstance reduction_mdp(const Graph& graph, double gamma);

/// (1 - gamma) gamma^2 w^T (I + G) w.
double mixture_cost_closed_form(const Graph& graph, const Vec& w, double gamma);

/// Exact maximum stable set size by branch-and-prune enumeration (m <= 20).
int independence_number(const Graph& graph);

struct LatticeMinimum {
  double value;              // min y^T (I+G) y over the lattice
  std::vector<int> counts;   // minimizer as integer counts summing to `denominator`
  std::int64_t numerator;    // value = numerator / denominator^2 exactly
  int denominator;
};

/// Minimum of y^T (I + G) y over {y in simplex : y = n / N}, N = 1 / resolution
/// (1 / resolution must be an integer). m <= 8.
LatticeMinimum motzkin_straus_lattice(const Graph& graph, double resolution);
double motzkin_straus_min(const Graph& graph, double resolution);

struct DecisionWitness {
  bool reachable;    // some lattice w has J(pi_w) <= r = (1 - gamma) gamma^2 / j
  Vec w;             // best lattice point
  double cost;       // J(pi_w) at w through the MDP solve
  double target;     // r
};

/// Decides "exists lattice w with J(pi_w) <= (1-gamma) gamma^2 / j" exactly
/// in integer arithmetic and re-evaluates the witness through the MDP.
DecisionWitness stable_set_decision(const Graph& graph, int j, double gamma, double resolution);

/// One representative per isomorphism class of graphs on m <= 6 vertices.
std::vector<Graph> graphs_up_to_isomorphism(int m);

}  // namespace mixopt
