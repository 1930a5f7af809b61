#include "cgca/classical.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "cgca/error.hpp"
#include "cgca/exact.hpp"

namespace cgca {

CorrelationMatrix cc_correlations(const Instance& inst) {
  const auto n = static_cast<std::size_t>(inst.n());
  std::vector<double> z(n * n, 0.0);
  for (const Edge& e : inst.edges()) {
    const auto i = static_cast<std::size_t>(e.i);
    const auto j = static_cast<std::size_t>(e.j);
    z[i * n + j] = z[j * n + i] = std::clamp(e.coupling(), -1.0, 1.0);
  }
  return CorrelationMatrix(inst.n(), std::move(z), CorrelationSource::CC);
}

ClusterPolicy random_cluster_policy(double p_const) {
  if (!(p_const >= 0.0 && p_const <= 1.0)) {
    throw InvalidParameter("random cluster probability must lie in [0,1]");
  }
  return {ClusterPolicy::Kind::ConstantProbability, p_const};
}

SampleSet mh_sample(const Instance& inst, double beta_s, const MetropolisOptions& opts,
                    std::uint64_t seed) {
  if (!(beta_s >= 0.0)) throw InvalidParameter("beta_s must be >= 0");
  if (opts.n_samples < 1) throw InvalidParameter("n_samples must be >= 1");
  if (opts.burn_in < 0 || opts.thin < 1) throw InvalidParameter("burn_in >= 0 and thin >= 1 required");
  const int n = inst.n();
  if (n == 0) throw InvalidParameter("mh_sample: empty instance");

  Rng rng(seed);
  SpinConfig state = random_config(inst, rng);
  auto& x = state.x;
  std::vector<double> local(static_cast<std::size_t>(n));
  for (Vertex v = 0; v < n; ++v) {
    double f = inst.field_at(v);
    for (const Incidence& inc : inst.adjacency(v)) {
      f += inst.edge(inc.edge).coupling() * x[static_cast<std::size_t>(inc.neighbor)];
    }
    local[static_cast<std::size_t>(v)] = f;
  }

  std::uint64_t proposals = 0;
  std::uint64_t accepted = 0;
  auto sweep = [&] {
    for (int k = 0; k < n; ++k) {
      const auto v = static_cast<Vertex>(uniform_index(rng, static_cast<std::uint64_t>(n)));
      const auto uv = static_cast<std::size_t>(v);
      const double de = 2.0 * x[uv] * local[uv];
      ++proposals;
      if (de <= 0.0 || uniform01(rng) < std::exp(-beta_s * de)) {
        ++accepted;
        x[uv] = static_cast<Spin>(-x[uv]);
        state.energy += de;
        const double twice = 2.0 * x[uv];
        for (const Incidence& inc : inst.adjacency(v)) {
          local[static_cast<std::size_t>(inc.neighbor)] += inst.edge(inc.edge).coupling() * twice;
        }
      }
    }
  };

  for (int s = 0; s < opts.burn_in; ++s) sweep();
  proposals = accepted = 0;

  SampleSet out;
  out.n = n;
  out.beta_s = beta_s;
  out.bitstrings.reserve(opts.n_samples);
  double m_sum = 0.0;
  for (std::size_t k = 0; k < opts.n_samples; ++k) {
    for (int s = 0; s < opts.thin; ++s) sweep();
    out.bitstrings.push_back(state);
    m_sum += magnetization(x);
  }
  out.mean_magnetization = m_sum / static_cast<double>(opts.n_samples);
  out.equilibration_warning =
      !inst.has_field() && std::abs(out.mean_magnetization) > kMagnetizationTolerance;
  out.acceptance_rate =
      proposals == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(proposals);

  if (opts.reference_cut) {
    score_samples(inst, out, *opts.reference_cut, false);
  } else if (n <= kBruteForceMaxN) {
    const ExactResult exact = brute_force(inst);
    score_samples(inst, out, max_cut_value(inst, exact.ground_states.front().x), true);
  }
  return out;
}

CorrelationMatrix mc_correlations(const SampleSet& samples) {
  if (samples.bitstrings.empty()) throw InvalidParameter("mc_correlations: empty sample set");
  if (!samples.weights.empty() && samples.weights.size() != samples.bitstrings.size()) {
    throw InvalidParameter("mc_correlations: weight count mismatch");
  }
  const auto n = static_cast<std::size_t>(samples.n);
  std::vector<double> acc(n * n, 0.0);
  double total = 0.0;
  for (std::size_t s = 0; s < samples.bitstrings.size(); ++s) {
    const auto& x = samples.bitstrings[s].x;
    if (x.size() != n) throw InvalidParameter("mc_correlations: bitstring length mismatch");
    const double w = samples.weights.empty() ? 1.0 : samples.weights[s];
    total += w;
    for (std::size_t i = 0; i < n; ++i) {
      const double wi = w * x[i];
      double* row = &acc[i * n];
      for (std::size_t j = i + 1; j < n; ++j) row[j] += wi * x[j];
    }
  }
  if (!(total > 0.0)) throw InvalidParameter("mc_correlations: total weight must be positive");
  std::vector<double> z(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) z[i * n + j] = z[j * n + i] = acc[i * n + j] / total;
  }
  return CorrelationMatrix(samples.n, std::move(z), CorrelationSource::MC, samples.beta_s);
}

// ---------------------------------------------------------------------------

int default_sdp_rank(int n) {
  return static_cast<int>(std::ceil(std::sqrt(2.0 * n))) + 1;
}

namespace {

double sdp_objective(const Instance& inst, const SdpSolution& sol) {
  double obj = 0.0;
  for (const Edge& e : inst.edges()) {
    const auto vi = sol.vector(e.i);
    const auto vj = sol.vector(e.j);
    double dot = 0.0;
    for (int k = 0; k < sol.rank; ++k) dot += vi[static_cast<std::size_t>(k)] * vj[static_cast<std::size_t>(k)];
    obj += 0.5 * e.weight * (1.0 - dot);
  }
  return obj;
}

void random_unit(std::span<double> v, Rng& rng) {
  std::normal_distribution<double> normal;
  double norm = 0.0;
  do {
    norm = 0.0;
    for (double& c : v) {
      c = normal(rng);
      norm += c * c;
    }
  } while (norm == 0.0);
  norm = std::sqrt(norm);
  for (double& c : v) c /= norm;
}

}  // namespace

SdpSolution sdp_solve(const Instance& inst, const SdpOptions& opts) {
  const int rank = opts.rank == 0 ? default_sdp_rank(inst.n()) : opts.rank;
  if (rank < 2) throw InvalidParameter("sdp_solve: rank must be >= 2");
  if (opts.max_sweeps < 1) throw InvalidParameter("sdp_solve: max_sweeps must be >= 1");

  SdpSolution sol;
  sol.n = inst.n();
  sol.rank = rank;
  const auto r = static_cast<std::size_t>(rank);
  sol.vectors.assign(static_cast<std::size_t>(inst.n()) * r, 0.0);
  Rng rng(opts.seed);
  for (Vertex i = 0; i < inst.n(); ++i) {
    random_unit({sol.vectors.data() + static_cast<std::size_t>(i) * r, r}, rng);
  }
  double prev = sdp_objective(inst, sol);

  std::vector<double> g(r);
  for (int sweep = 0; sweep < opts.max_sweeps; ++sweep) {
    for (Vertex i = 0; i < inst.n(); ++i) {
      std::fill(g.begin(), g.end(), 0.0);
      for (const Incidence& inc : inst.adjacency(i)) {
        const double a = inst.edge(inc.edge).weight;
        const auto vj = sol.vector(inc.neighbor);
        for (std::size_t k = 0; k < r; ++k) g[k] += a * vj[k];
      }
      double norm = 0.0;
      for (double c : g) norm += c * c;
      norm = std::sqrt(norm);
      std::span<double> vi{sol.vectors.data() + static_cast<std::size_t>(i) * r, r};
      if (norm < 1e-14) {
        // Objective does not depend on v_i here; any unit vector is optimal.
        random_unit(vi, rng);
        ++sol.rerandomized;
        continue;
      }
      for (std::size_t k = 0; k < r; ++k) vi[k] = -g[k] / norm;
    }
    const double obj = sdp_objective(inst, sol);
    sol.history.push_back(obj);
    sol.sweeps = sweep + 1;
    if (std::abs(obj - prev) <= opts.tol * std::max(1.0, std::abs(obj))) {
      sol.converged = true;
      prev = obj;
      break;
    }
    prev = obj;
  }
  sol.objective = prev;
  return sol;
}

CorrelationMatrix sdp_correlations(const SdpSolution& sol) {
  const auto n = static_cast<std::size_t>(sol.n);
  const auto r = static_cast<std::size_t>(sol.rank);
  std::vector<double> z(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      double dot = 0.0;
      for (std::size_t k = 0; k < r; ++k) dot += sol.vectors[i * r + k] * sol.vectors[j * r + k];
      z[i * n + j] = z[j * n + i] = std::clamp(dot, -1.0, 1.0);
    }
  }
  return CorrelationMatrix(sol.n, std::move(z), CorrelationSource::SDP);
}

RoundingResult gw_round(const Instance& inst, SdpSolution& sol, int n_rounds, std::uint64_t seed) {
  if (n_rounds < 1) throw InvalidParameter("gw_round: n_rounds must be >= 1");
  if (sol.n != inst.n()) throw InvalidParameter("gw_round: solution does not match instance");
  Rng rng(seed);
  std::normal_distribution<double> normal;
  const auto r = static_cast<std::size_t>(sol.rank);
  std::vector<double> g(r);
  std::vector<Spin> x(static_cast<std::size_t>(inst.n()));

  RoundingResult res;
  res.best_cut = -std::numeric_limits<double>::infinity();
  double sum = 0.0;
  double sum_sq = 0.0;
  for (int round = 0; round < n_rounds; ++round) {
    for (double& c : g) c = normal(rng);
    for (Vertex i = 0; i < inst.n(); ++i) {
      const auto vi = sol.vector(i);
      double dot = 0.0;
      for (std::size_t k = 0; k < r; ++k) dot += vi[k] * g[k];
      x[static_cast<std::size_t>(i)] = dot >= 0.0 ? Spin{1} : Spin{-1};
    }
    const double cut = max_cut_value(inst, x);
    sum += cut;
    sum_sq += cut * cut;
    if (cut > res.best_cut) {
      res.best_cut = cut;
      res.best = make_config(inst, x);
    }
  }
  const double rounds = n_rounds;
  res.mean_cut = sum / rounds;
  res.stddev_cut =
      n_rounds > 1 ? std::sqrt(std::max(0.0, (sum_sq - rounds * res.mean_cut * res.mean_cut) / (rounds - 1)))
                   : 0.0;
  res.ratio = sol.objective != 0.0 ? res.mean_cut / sol.objective
                                   : std::numeric_limits<double>::quiet_NaN();
  sol.rounding_ratio = res.ratio;
  return res;
}

}  // namespace cgca
