#pragma once

#include <cstdint>
#include <vector>

#include "cgca/correlation.hpp"
#include "cgca/instance.hpp"

namespace cgca {

struct ExactResult {
  double e_min = 0.0;
  double e_max = 0.0;
  // Ground states with x_0 = +1 when the field is zero (one per Z2 pair).
  // Holds at most kMaxStoredGroundStates entries; `degeneracy` counts all.
  std::vector<SpinConfig> ground_states;
  std::uint64_t degeneracy = 0;
};

inline constexpr int kBruteForceMaxN = 30;
inline constexpr int kBoltzmannMaxN = 20;
inline constexpr std::size_t kMaxStoredGroundStates = 4096;

// Exhaustive search by Gray-code enumeration with O(degree) energy updates.
// Without a field only configurations with x_0 = +1 are visited. The
// configuration space is split into `threads` contiguous blocks; the result
// does not depend on the thread count.
ExactResult brute_force(const Instance& inst, int threads = 1);

// <x_i x_j> under exp(-beta H) / Z, by exhaustive enumeration. Diagonal is 1.
CorrelationMatrix exact_boltzmann_correlations(const Instance& inst, double beta_s);

}  // namespace cgca
