#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "cgca/cluster.hpp"
#include "cgca/correlation.hpp"
#include "cgca/instance.hpp"

namespace cgca {

// Z_ij = J_ij on edges, 0 elsewhere.
CorrelationMatrix cc_correlations(const Instance& inst);

// Constant link probability in place of the correlation-guided rule.
ClusterPolicy random_cluster_policy(double p_const);

struct MetropolisOptions {
  int burn_in = 1000;  // sweeps
  int thin = 10;       // sweeps between recorded samples
  std::size_t n_samples = 2000;
  // Cut used for mean_approx_ratio. When absent and n <= 30 the exact
  // optimum is computed; otherwise the ratio is left NaN.
  std::optional<double> reference_cut;
};

inline constexpr double kMagnetizationTolerance = 0.01;

// Single-spin Metropolis chain at fixed beta_s. A sweep is n proposals at
// uniformly random sites. equilibration_warning is set when the absolute
// mean magnetization over recorded samples exceeds 1%.
SampleSet mh_sample(const Instance& inst, double beta_s, const MetropolisOptions& opts,
                    std::uint64_t seed);

// Sample (or weighted) average of x_i x_j over every pair; tagged MC(beta_s).
CorrelationMatrix mc_correlations(const SampleSet& samples);

struct SdpOptions {
  int rank = 0;  // 0 selects ceil(sqrt(2n)) + 1
  int max_sweeps = 10000;
  double tol = 1e-8;  // relative objective change between sweeps
  std::uint64_t seed = 0;
};

struct SdpSolution {
  int n = 0;
  int rank = 0;
  std::vector<double> vectors;  // row-major n x rank, unit rows
  double objective = 0.0;       // 1/2 sum A_ij (1 - v_i . v_j)
  double rounding_ratio = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> history;  // objective after each sweep
  int sweeps = 0;
  int rerandomized = 0;  // zero-norm updates replaced by random directions
  bool converged = false;

  std::span<const double> vector(Vertex i) const {
    return {vectors.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(rank),
            static_cast<std::size_t>(rank)};
  }
};

int default_sdp_rank(int n);

// Low-rank Max-Cut SDP by cyclic coordinate updates
// v_i <- -normalize(sum_j A_ij v_j); each update is the exact maximizer over
// v_i, so the objective never decreases.
SdpSolution sdp_solve(const Instance& inst, const SdpOptions& opts = {});

// Z_ij = v_i . v_j, clipped to [-1, 1].
CorrelationMatrix sdp_correlations(const SdpSolution& sol);

struct RoundingResult {
  SpinConfig best;
  double best_cut = 0.0;
  double mean_cut = 0.0;
  double stddev_cut = 0.0;  // sample standard deviation over rounds
  double ratio = 0.0;       // mean_cut / SDP objective
};

// Random-hyperplane rounding: x_i = sign(v_i . g), g standard normal, exact
// zero mapped to +1. Also stores the ratio in sol.rounding_ratio.
RoundingResult gw_round(const Instance& inst, SdpSolution& sol, int n_rounds, std::uint64_t seed);

}  // namespace cgca
