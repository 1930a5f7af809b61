#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "cgca/cluster.hpp"
#include "cgca/correlation.hpp"
#include "cgca/instance.hpp"

namespace cgca {

// Linear inverse-temperature schedule advanced by the number of spins each
// proposal flips. beta = beta_f * consumed / (m - 1); the charge of the final
// proposal is capped at the remaining budget, so consumed never exceeds m - 1.
struct ScheduleState {
  double beta = 0.0;
  double beta_f = 0.0;
  std::uint64_t m = 0;
  std::uint64_t consumed = 0;

  bool active() const noexcept { return beta < beta_f; }
};

struct AcceptanceEvent {
  double beta = 0.0;
  int cluster_size = 0;
  double delta_e = 0.0;
  bool accepted = false;
};

struct RunOptions {
  bool record_events = true;
  double window_lo = 1.0;  // events are recorded when window_lo <= beta <= window_hi
  double window_hi = 8.0;
  // Recompute H(x) from scratch after every accepted move and throw on a
  // mismatch. Exact for integer weights; meant for tests.
  bool verify_energy = false;
};

struct RunRecord {
  double e_best = 0.0;
  SpinConfig x_best;
  double e_final = 0.0;
  std::vector<AcceptanceEvent> events;
  std::uint64_t evaluations = 0;  // proposals made
  std::uint64_t flipped_spins = 0;  // sum of proposed cluster sizes
  std::uint64_t accepted = 0;
  ScheduleState schedule;
  double wall_seconds = 0.0;
};

// 2 * sum over boundary bonds (i in C, j not in C) of J_ij x_i x_j, plus
// 2 * sum_{i in C} h_i x_i. Duplicates in `members` are ignored.
double delta_energy(const Instance& inst, std::span<const Spin> x, std::span<const Vertex> members);

// Correlation-guided cluster annealing. Starts at beta = 0 from a random
// configuration; each iteration grows a cluster from a uniformly random seed,
// proposes flipping it, accepts downhill moves and uphill moves with
// probability exp(-beta dE), then advances beta by beta_f/(m-1) * |C|
// whether or not the move was accepted. Runs while beta < beta_f.
RunRecord run_ca(const ClusterContext& ctx, double beta_f, std::uint64_t m, std::uint64_t seed,
                 const RunOptions& opts = {});

RunRecord run_ca(const Instance& inst, const CorrelationMatrix* z, double beta_f, std::uint64_t m,
                 double lambda_scale, ClusterPolicy policy, std::uint64_t seed,
                 const RunOptions& opts = {});

// Single-spin simulated annealing: m proposals at uniformly random sites,
// the t-th at beta = beta_f * t / (m - 1).
RunRecord run_sa(const Instance& inst, double beta_f, std::uint64_t m, std::uint64_t seed,
                 const RunOptions& opts = {});

struct AcceptanceSummary {
  std::vector<double> rates;  // one per record with events in the window
  double median = 0.0;
  double q1 = 0.0;
  double q3 = 0.0;
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
};

// Linear-interpolated quantile of an already sorted sample.
double sorted_quantile(std::span<const double> sorted, double q);

// Per-record acceptance rate over events with window_lo <= beta <= window_hi,
// summarized across records. Throws InvalidParameter when no record has an
// event in the window.
AcceptanceSummary acceptance_statistics(std::span<const RunRecord> records, double window_lo,
                                        double window_hi);
AcceptanceSummary summarize_rates(std::vector<double> rates);

}  // namespace cgca
