#include "mixopt/io.hpp"

#include <bit>
#include <cstdio>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace mixopt {

namespace {

struct Fnv {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const unsigned char*>(p);
    for (std::size_t i = 0; i < n; ++i) {
      h ^= c[i];
      h *= 0x100000001b3ULL;
    }
  }
  void i64(std::int64_t v) { bytes(&v, sizeof v); }
  void f64(double v) {
    const auto bits = std::bit_cast<std::uint64_t>(v);
    bytes(&bits, sizeof bits);
  }
};

[[noreturn]] void cache_error(int line, const std::string& what) {
  throw InvalidInput("occupancy cache line " + std::to_string(line) + ": " + what);
}

}  // namespace

std::uint64_t hash_mdp(const TabularMdp& mdp) {
  Fnv f;
  f.i64(mdp.num_states());
  f.i64(mdp.num_actions());
  f.f64(mdp.discount());
  for (double v : mdp.initial()) f.f64(v);
  for (double v : mdp.costs()) f.f64(v);
  for (int x = 0; x < mdp.num_states(); ++x)
    for (int a = 0; a < mdp.num_actions(); ++a)
      for (const Transition& t : mdp.transitions(x, a)) {
        f.i64(t.next);
        f.f64(t.prob);
      }
  return f.h;
}

std::uint64_t hash_policies(const PolicyBasis& basis) {
  Fnv f;
  f.i64(basis.size());
  for (const auto& p : basis.policies()) {
    f.i64(p.num_states());
    f.i64(p.num_actions());
    for (double v : p.probs()) f.f64(v);
  }
  return f.h;
}

std::uint64_t hash_text(std::string_view text) {
  Fnv f;
  f.bytes(text.data(), text.size());
  return f.h;
}

std::string hex64(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

void write_occupancy_cache(std::ostream& out, const OccupancyCache& cache) {
  if (cache.measures.empty()) throw InvalidInput("occupancy cache: no measures");
  const int X = cache.measures.front().num_states;
  const int A = cache.measures.front().num_actions;
  out << "# env=" << cache.env_hash << " policies=" << cache.policy_hash << '\n';
  if (!cache.state_keys.empty()) {
    if (cache.state_keys.size() != static_cast<std::size_t>(X))
      throw InvalidInput("occupancy cache: one state key per state expected");
    out << "# states=";
    for (std::size_t i = 0; i < cache.state_keys.size(); ++i) out << (i ? "," : "") << cache.state_keys[i];
    out << '\n';
  }
  out << X << ' ' << A << ' ' << cache.measures.size() << '\n';
  for (const auto& mu : cache.measures) {
    if (mu.num_states != X || mu.num_actions != A) throw InvalidInput("occupancy cache: measures differ in shape");
    for (int x = 0; x < X; ++x)
      for (int a = 0; a < A; ++a) out << x << ' ' << a << ' ' << format_double(mu(x, a)) << '\n';
  }
}

OccupancyCache read_occupancy_cache(std::istream& in) {
  OccupancyCache cache;
  std::string line;
  int lineno = 0;
  auto next_line = [&]() -> bool {
    while (std::getline(in, line)) {
      ++lineno;
      if (line.rfind("#", 0) == 0) {
        std::istringstream ss(line.substr(1));
        std::string tok;
        while (ss >> tok) {
          if (tok.rfind("env=", 0) == 0) cache.env_hash = tok.substr(4);
          if (tok.rfind("policies=", 0) == 0) cache.policy_hash = tok.substr(9);
          if (tok.rfind("states=", 0) == 0) {
            std::istringstream ks(tok.substr(7));
            std::string k;
            while (std::getline(ks, k, ',')) {
              try {
                cache.state_keys.push_back(std::stoull(k));
              } catch (const std::exception&) {
                cache_error(lineno, "bad state key `" + k + "`");
              }
            }
          }
        }
        continue;
      }
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      return true;
    }
    return false;
  };
  if (!next_line()) cache_error(lineno, "missing `X A m` header");
  long X = 0, A = 0, m = 0;
  {
    std::istringstream ss(line);
    if (!(ss >> X >> A >> m) || X < 1 || A < 1 || m < 1) cache_error(lineno, "malformed `X A m` header");
  }
  for (long i = 0; i < m; ++i) {
    Vec mu(static_cast<std::size_t>(X * A));
    for (long x = 0; x < X; ++x)
      for (long a = 0; a < A; ++a) {
        if (!next_line()) cache_error(lineno, "unexpected end of file in block " + std::to_string(i));
        std::istringstream ss(line);
        long rx, ra;
        double v;
        if (!(ss >> rx >> ra >> v)) cache_error(lineno, "expected `x a value`");
        if (rx != x || ra != a) cache_error(lineno, "entries out of row-major order");
        mu[x * A + a] = v;
      }
    cache.measures.push_back(OccupancyMeasure::from_state_action(static_cast<int>(X), static_cast<int>(A), std::move(mu)));
  }
  if (next_line()) cache_error(lineno, "trailing data");
  if (!cache.state_keys.empty() && cache.state_keys.size() != static_cast<std::size_t>(X))
    cache_error(lineno, "state key count does not match X");
  return cache;
}

void save_occupancy_cache(const std::string& path, const OccupancyCache& cache) {
  std::ofstream out(path);
  if (!out) throw InvalidInput("cannot write " + path);
  write_occupancy_cache(out, cache);
}

std::optional<OccupancyCache> load_cached_occupancies(const std::string& path, const std::string& env_hash,
                                                      const std::string& policy_hash) {
  std::ifstream in(path);
  if (!in) return std::nullopt;
  try {
    OccupancyCache cache = read_occupancy_cache(in);
    if (cache.env_hash != env_hash || cache.policy_hash != policy_hash) return std::nullopt;
    return cache;
  } catch (const InvalidInput&) {
    return std::nullopt;
  }
}

void write_primal_trace(std::ostream& out, const std::vector<PrimalTraceRow>& trace, int m) {
  out << "iter,objective";
  for (int i = 0; i < m; ++i) out << ",w_" << i;
  out << '\n';
  for (const auto& r : trace) {
    out << r.iter << ',' << format_double(r.objective);
    for (double v : r.w) out << ',' << format_double(v);
    out << '\n';
  }
}

void write_sgd_trace(std::ostream& out, const std::vector<SgdTraceRow>& trace, int m) {
  const bool with_true = !trace.empty() && trace.front().true_cost.has_value();
  out << "t,L_est,U";
  for (int i = 0; i < m; ++i) out << ",theta_" << i;
  if (with_true) out << ",J_true";
  out << '\n';
  for (const auto& r : trace) {
    out << r.t << ',' << format_double(r.surrogate) << ',' << format_double(r.violation);
    for (double v : r.theta) out << ',' << format_double(v);
    if (with_true) out << ',' << format_double(r.true_cost.value_or(0.0));
    out << '\n';
  }
}

}  // namespace mixopt
