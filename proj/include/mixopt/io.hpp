#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mixopt/dual.hpp"
#include "mixopt/mdp.hpp"
#include "mixopt/mixture.hpp"

namespace mixopt {

/// FNV-1a over the exact bit patterns of an MDP's data.
std::uint64_t hash_mdp(const TabularMdp& mdp);
std::uint64_t hash_policies(const PolicyBasis& basis);
std::uint64_t hash_text(std::string_view text);
std::string hex64(std::uint64_t h);

// Occupancy cache: `# env=<hex> policies=<hex>`, then `X A m`, then m blocks
// of X*A lines `x a value` (row-major, 17 significant digits). Simulator
// spaces add a `# states=k0,k1,...` line mapping row blocks to state keys.

struct OccupancyCache {
  std::string env_hash;
  std::string policy_hash;
  std::vector<OccupancyMeasure> measures;
  std::vector<StateKey> state_keys;
};

void write_occupancy_cache(std::ostream& out, const OccupancyCache& cache);
OccupancyCache read_occupancy_cache(std::istream& in);

void save_occupancy_cache(const std::string& path, const OccupancyCache& cache);
/// The cache at `path` if it exists, parses and its hashes match; nullopt otherwise.
std::optional<OccupancyCache> load_cached_occupancies(const std::string& path, const std::string& env_hash,
                                                      const std::string& policy_hash);

/// iter,objective,w_0..w_{m-1}
void write_primal_trace(std::ostream& out, const std::vector<PrimalTraceRow>& trace, int m);
/// t,L_est,U,theta_0..theta_{m-1}[,J_true]
void write_sgd_trace(std::ostream& out, const std::vector<SgdTraceRow>& trace, int m);

}  // namespace mixopt
