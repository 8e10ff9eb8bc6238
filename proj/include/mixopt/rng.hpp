#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace mixopt {

using Engine = std::mt19937_64;

// All randomness is derived from one 64-bit experiment seed. Each component
// asks for a named child stream (and optionally an index, e.g. an episode
// number), so adding a consumer never perturbs the draws of another one.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream, std::uint64_t index = 0);

inline Engine make_stream(std::uint64_t seed, std::string_view stream, std::uint64_t index = 0) {
  return Engine(derive_seed(seed, stream, index));
}

// The standard distributions are implementation-defined, so the few we need
// are spelled out to keep traces identical across standard libraries.

/// Uniform double in [0, 1) with 53 random bits.
inline double uniform01(Engine& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, n), multiply-shift reduction.
inline int uniform_index(Engine& rng, int n) {
  return static_cast<int>((static_cast<unsigned __int128>(rng()) * static_cast<unsigned>(n)) >> 64);
}

}  // namespace mixopt
