#pragma once

#include <complex>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "cgca/correlation.hpp"
#include "cgca/instance.hpp"

namespace cgca {

inline constexpr int kQaoaMaxQubits = 24;

struct QaoaParams {
  int p = 0;
  std::vector<double> betas;   // mixer angles
  std::vector<double> gammas;  // cost angles

  static QaoaParams zeros(int p);
  // Throws InvalidParameter unless both vectors have length p and are finite.
  void validate() const;
  // Same angles followed by zeros up to depth `p`.
  QaoaParams padded(int p) const;
};

// "p" on the first line, then p lines "beta gamma".
void write_qaoa_params(const QaoaParams& params, const std::filesystem::path& path);
QaoaParams read_qaoa_params(const std::filesystem::path& path);

struct QaoaState {
  int n = 0;
  // Basis index bit q set means spin q is -1.
  std::vector<std::complex<double>> amplitudes;
  QaoaParams params;
  double expected_energy = 0.0;  // <H_C>
};

// Statevector simulator for one instance. Precomputes the diagonal of
// H_C = -sum J_ij Z_i Z_j - sum h_i Z_i once; evaluations reuse a buffer.
class QaoaSimulator {
 public:
  explicit QaoaSimulator(const Instance& inst);

  int n() const noexcept { return n_; }
  const std::vector<double>& diagonal() const noexcept { return diagonal_; }

  // |psi> = U_M(beta_p) U_C(gamma_p) ... U_M(beta_1) U_C(gamma_1) |+>^n with
  // U_C = exp(-i gamma H_C), U_M = exp(-i beta H_M), H_M = -sum X_i.
  QaoaState prepare(const QaoaParams& params) const;
  double expectation(const QaoaParams& params);

 private:
  void evolve(const QaoaParams& params, std::vector<std::complex<double>>& psi) const;

  int n_ = 0;
  std::vector<double> diagonal_;
  // Distinct diagonal values and the level of each basis state; phases are
  // computed once per level.
  std::vector<double> levels_;
  std::vector<std::uint32_t> level_of_;
  std::vector<std::complex<double>> scratch_;
};

QaoaState qaoa_prepare(const Instance& inst, const QaoaParams& params);

// Z_ij = sum_x |amp_x|^2 x_i x_j for every pair, via a Walsh-Hadamard
// transform of the probabilities. Tagged QAOA(p).
CorrelationMatrix qaoa_correlations(const QaoaState& state);

struct QaoaOptimizeOptions {
  int restarts = 10;
  int max_iterations = 0;  // per restart; 0 selects 500 * p
  std::uint64_t seed = 0;
  // Extra starting point, padded with zeros to depth p.
  std::optional<QaoaParams> warm_start;
};

struct QaoaOptimizeResult {
  QaoaParams params;
  double expected_energy = 0.0;
  bool iteration_limit = false;  // best restart stopped on the iteration cap
  std::vector<double> running_best;  // best <H_C> after each restart
  std::size_t evaluations = 0;
};

// Multi-start Nelder-Mead over the 2p angles minimizing <H_C>. Starts: a
// linear ramp (gamma rising, beta falling), the optional warm start, then
// uniform draws with gamma in [-pi, pi], beta in [-pi/2, pi/2].
QaoaOptimizeResult qaoa_optimize(const Instance& inst, int p, const QaoaOptimizeOptions& opts = {});

// Draws bitstrings from |amp|^2. The approximation ratio is scored against
// `reference_cut` or, when absent and n <= 30, the exact optimum.
SampleSet qaoa_sample(const Instance& inst, const QaoaState& state, std::size_t shots,
                      std::uint64_t seed, std::optional<double> reference_cut = std::nullopt);

// Closed-form depth-1 correlations on any weighted graph without a field:
//   Z_ij = sin(2b)cos(2b) sin(2g J_ij) [prod_k cos(2g J_ik) + prod_k cos(2g J_jk)]
//        - sin^2(2b)/2 [prod_k cos 2g(J_ik + J_jk) - prod_k cos 2g(J_jk - J_ik)]
// with products over k != i, j. Pairs further than two hops apart are zero.
CorrelationMatrix qaoa_p1_correlations(const Instance& inst, double beta1, double gamma1);

// <H_C> at depth 1 from the closed form: -sum over edges of J_ij Z_ij.
double qaoa_p1_energy(const Instance& inst, double beta1, double gamma1);

// Depth-1 angle search on the closed-form energy; no statevector, so any n.
// Same restart scheme as qaoa_optimize.
QaoaOptimizeResult qaoa_p1_optimize(const Instance& inst, const QaoaOptimizeOptions& opts = {});

struct P1TermRatio {
  double mean_ratio = 0.0;  // mean over used edges of |second| / |first|
  std::size_t edges_used = 0;
  std::size_t edges_excluded = 0;  // first summand zero
  bool all_excluded() const noexcept { return edges_used == 0; }
};

// Relative size of the second summand of the depth-1 formula over edges.
P1TermRatio p1_term_ratio(const Instance& inst, const QaoaParams& params);

}  // namespace cgca
