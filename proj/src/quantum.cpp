#include "cgca/quantum.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <map>
#include <numbers>
#include <set>

#include "cgca/error.hpp"
#include "cgca/exact.hpp"
#include "cgca/nelder_mead.hpp"
#include "cgca/text.hpp"

namespace cgca {

using cplx = std::complex<double>;

QaoaParams QaoaParams::zeros(int p) {
  if (p < 0) throw InvalidParameter("QAOA depth must be >= 0");
  return {p, std::vector<double>(static_cast<std::size_t>(p), 0.0),
          std::vector<double>(static_cast<std::size_t>(p), 0.0)};
}

void QaoaParams::validate() const {
  if (p < 0 || betas.size() != static_cast<std::size_t>(p) ||
      gammas.size() != static_cast<std::size_t>(p)) {
    throw InvalidParameter("QAOA parameter vectors must both have length p");
  }
  auto finite = [](double v) { return std::isfinite(v); };
  if (!std::all_of(betas.begin(), betas.end(), finite) ||
      !std::all_of(gammas.begin(), gammas.end(), finite)) {
    throw InvalidParameter("QAOA angles must be finite");
  }
}

QaoaParams QaoaParams::padded(int depth) const {
  if (depth < p) throw InvalidParameter("cannot pad QAOA parameters to a smaller depth");
  QaoaParams out = *this;
  out.p = depth;
  out.betas.resize(static_cast<std::size_t>(depth), 0.0);
  out.gammas.resize(static_cast<std::size_t>(depth), 0.0);
  return out;
}

void write_qaoa_params(const QaoaParams& params, const std::filesystem::path& path) {
  params.validate();
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << params.p << '\n';
  for (int k = 0; k < params.p; ++k) {
    out << text::format_double(params.betas[static_cast<std::size_t>(k)]) << ' '
        << text::format_double(params.gammas[static_cast<std::size_t>(k)]) << '\n';
  }
  if (!out) throw Error("write failed for " + path.string());
}

QaoaParams read_qaoa_params(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string(), 0);
  std::string raw;
  std::size_t line = 0;
  QaoaParams params;
  bool have_p = false;
  while (std::getline(in, raw)) {
    ++line;
    auto toks = text::split_ws(raw);
    if (toks.empty() || toks[0].front() == '#') continue;
    if (!have_p) {
      if (toks.size() != 1) throw ParseError("first line must be the depth p", line);
      params.p = text::parse_number<int>(toks[0], line, "depth");
      if (params.p < 0) throw ParseError("negative depth", line);
      have_p = true;
      continue;
    }
    if (toks.size() != 2) throw ParseError("angle line must be 'beta gamma'", line);
    params.betas.push_back(text::parse_number<double>(toks[0], line, "beta"));
    params.gammas.push_back(text::parse_number<double>(toks[1], line, "gamma"));
  }
  if (!have_p) throw ParseError("missing depth line", line);
  if (params.betas.size() != static_cast<std::size_t>(params.p)) {
    throw ParseError("expected " + std::to_string(params.p) + " angle lines", line);
  }
  return params;
}

// ---------------------------------------------------------------------------

QaoaSimulator::QaoaSimulator(const Instance& inst) : n_(inst.n()) {
  if (n_ > kQaoaMaxQubits) {
    throw SizeLimit("QAOA simulation limited to n <= " + std::to_string(kQaoaMaxQubits));
  }
  const std::size_t dim = std::size_t{1} << n_;
  diagonal_.resize(dim);

  // Gray-code walk over basis states with O(degree) updates.
  std::vector<Spin> x(static_cast<std::size_t>(n_), Spin{1});
  double e = energy(inst, x);
  diagonal_[0] = e;
  for (std::size_t s = 1; s < dim; ++s) {
    const auto q = static_cast<Vertex>(std::countr_zero(s));
    const auto uq = static_cast<std::size_t>(q);
    double local = inst.field_at(q);
    for (const Incidence& inc : inst.adjacency(q)) {
      local += inst.edge(inc.edge).coupling() * x[static_cast<std::size_t>(inc.neighbor)];
    }
    e += 2.0 * x[uq] * local;
    x[uq] = static_cast<Spin>(-x[uq]);
    diagonal_[s ^ (s >> 1)] = e;
  }
  if (inst.integer_weights()) {
    std::map<double, std::uint32_t> index;
    for (double v : diagonal_) index.emplace(v, 0);
    for (auto& [v, idx] : index) {
      idx = static_cast<std::uint32_t>(levels_.size());
      levels_.push_back(v);
    }
    level_of_.resize(dim);
    for (std::size_t s = 0; s < dim; ++s) level_of_[s] = index.at(diagonal_[s]);
  }
}

void QaoaSimulator::evolve(const QaoaParams& params, std::vector<cplx>& psi) const {
  params.validate();
  const std::size_t dim = diagonal_.size();
  psi.assign(dim, cplx(1.0 / std::sqrt(static_cast<double>(dim)), 0.0));
  std::vector<cplx> phases(levels_.size());
  for (int layer = 0; layer < params.p; ++layer) {
    const double gamma = params.gammas[static_cast<std::size_t>(layer)];
    const double beta = params.betas[static_cast<std::size_t>(layer)];
    if (!levels_.empty()) {
      for (std::size_t l = 0; l < levels_.size(); ++l) phases[l] = std::polar(1.0, -gamma * levels_[l]);
      for (std::size_t s = 0; s < dim; ++s) psi[s] *= phases[level_of_[s]];
    } else {
      for (std::size_t s = 0; s < dim; ++s) psi[s] *= std::polar(1.0, -gamma * diagonal_[s]);
    }
    // exp(i beta X) on each qubit.
    const double c = std::cos(beta);
    const cplx is(0.0, std::sin(beta));
    for (int q = 0; q < n_; ++q) {
      const std::size_t bit = std::size_t{1} << q;
      for (std::size_t s = 0; s < dim; ++s) {
        if (s & bit) continue;
        const cplx a0 = psi[s];
        const cplx a1 = psi[s | bit];
        psi[s] = c * a0 + is * a1;
        psi[s | bit] = is * a0 + c * a1;
      }
    }
  }
}

QaoaState QaoaSimulator::prepare(const QaoaParams& params) const {
  QaoaState state;
  state.n = n_;
  state.params = params;
  evolve(params, state.amplitudes);
  double e = 0.0;
  for (std::size_t s = 0; s < diagonal_.size(); ++s) e += std::norm(state.amplitudes[s]) * diagonal_[s];
  state.expected_energy = e;
  return state;
}

double QaoaSimulator::expectation(const QaoaParams& params) {
  evolve(params, scratch_);
  double e = 0.0;
  for (std::size_t s = 0; s < diagonal_.size(); ++s) e += std::norm(scratch_[s]) * diagonal_[s];
  return e;
}

QaoaState qaoa_prepare(const Instance& inst, const QaoaParams& params) {
  return QaoaSimulator(inst).prepare(params);
}

CorrelationMatrix qaoa_correlations(const QaoaState& state) {
  const std::size_t dim = state.amplitudes.size();
  if (dim != (std::size_t{1} << state.n)) throw InvalidParameter("malformed QAOA state");
  std::vector<double> w(dim);
  for (std::size_t s = 0; s < dim; ++s) w[s] = std::norm(state.amplitudes[s]);
  // In-place Walsh-Hadamard: w[mask] = sum_x p(x) (-1)^{popcount(x & mask)}.
  for (std::size_t h = 1; h < dim; h <<= 1) {
    for (std::size_t i = 0; i < dim; i += h << 1) {
      for (std::size_t j = i; j < i + h; ++j) {
        const double a = w[j];
        const double b = w[j + h];
        w[j] = a + b;
        w[j + h] = a - b;
      }
    }
  }
  const auto n = static_cast<std::size_t>(state.n);
  std::vector<double> z(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = i + 1; j < n; ++j) {
      z[i * n + j] = z[j * n + i] = w[(std::size_t{1} << i) | (std::size_t{1} << j)];
    }
  }
  return CorrelationMatrix(state.n, std::move(z), CorrelationSource::QAOA, state.params.p);
}

// ---------------------------------------------------------------------------

namespace {

std::vector<double> flatten(const QaoaParams& p) {
  std::vector<double> v = p.betas;
  v.insert(v.end(), p.gammas.begin(), p.gammas.end());
  return v;
}

QaoaParams unflatten(std::span<const double> v, int p) {
  const auto up = static_cast<std::size_t>(p);
  return {p, {v.begin(), v.begin() + static_cast<std::ptrdiff_t>(up)},
          {v.begin() + static_cast<std::ptrdiff_t>(up), v.end()}};
}

QaoaParams linear_ramp(int p) {
  constexpr double kStep = 0.75;
  QaoaParams params = QaoaParams::zeros(p);
  for (int k = 0; k < p; ++k) {
    const double frac = (k + 0.5) / p;
    params.gammas[static_cast<std::size_t>(k)] = kStep * frac;
    params.betas[static_cast<std::size_t>(k)] = kStep * (1.0 - frac);
  }
  return params;
}

}  // namespace

namespace {

template <typename Objective>
QaoaOptimizeResult multistart(int p, const QaoaOptimizeOptions& opts, Objective&& objective) {
  if (p < 1) throw InvalidParameter("QAOA depth must be >= 1");
  if (opts.restarts < 1) throw InvalidParameter("need at least one restart");
  Rng rng(opts.seed);

  std::vector<QaoaParams> starts{linear_ramp(p)};
  if (opts.warm_start) starts.push_back(opts.warm_start->padded(p));
  while (static_cast<int>(starts.size()) < opts.restarts) {
    QaoaParams r = QaoaParams::zeros(p);
    for (int k = 0; k < p; ++k) {
      r.gammas[static_cast<std::size_t>(k)] = (2.0 * uniform01(rng) - 1.0) * std::numbers::pi;
      r.betas[static_cast<std::size_t>(k)] = (uniform01(rng) - 0.5) * std::numbers::pi;
    }
    starts.push_back(std::move(r));
  }

  NelderMeadOptions nm;
  nm.max_iterations = opts.max_iterations > 0 ? opts.max_iterations : 500 * p;
  auto f = [&](std::span<const double> v) { return objective(unflatten(v, p)); };

  QaoaOptimizeResult best;
  best.expected_energy = std::numeric_limits<double>::infinity();
  for (const QaoaParams& start : starts) {
    const NelderMeadResult r = nelder_mead(f, flatten(start), nm);
    best.evaluations += r.evaluations;
    if (r.value < best.expected_energy) {
      best.expected_energy = r.value;
      best.params = unflatten(r.x, p);
      best.iteration_limit = r.hit_iteration_limit;
    }
    best.running_best.push_back(best.expected_energy);
  }
  return best;
}

}  // namespace

QaoaOptimizeResult qaoa_optimize(const Instance& inst, int p, const QaoaOptimizeOptions& opts) {
  QaoaSimulator sim(inst);
  return multistart(p, opts, [&](const QaoaParams& params) { return sim.expectation(params); });
}

SampleSet qaoa_sample(const Instance& inst, const QaoaState& state, std::size_t shots,
                      std::uint64_t seed, std::optional<double> reference_cut) {
  if (shots < 1) throw InvalidParameter("shots must be >= 1");
  if (state.n != inst.n()) throw InvalidParameter("state does not match instance");
  std::vector<double> cdf(state.amplitudes.size());
  double acc = 0.0;
  for (std::size_t s = 0; s < cdf.size(); ++s) {
    acc += std::norm(state.amplitudes[s]);
    cdf[s] = acc;
  }
  Rng rng(seed);
  SampleSet out;
  out.n = state.n;
  out.bitstrings.reserve(shots);
  for (std::size_t k = 0; k < shots; ++k) {
    const double u = uniform01(rng) * acc;
    // upper_bound never lands on a zero-probability state.
    auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    if (it == cdf.end()) it = std::prev(cdf.end());
    const auto s = static_cast<std::size_t>(it - cdf.begin());
    std::vector<Spin> x(static_cast<std::size_t>(state.n));
    for (std::size_t q = 0; q < x.size(); ++q) x[q] = ((s >> q) & 1U) != 0U ? Spin{-1} : Spin{1};
    out.bitstrings.push_back(make_config(inst, std::move(x)));
  }
  if (reference_cut) {
    score_samples(inst, out, *reference_cut, false);
  } else if (inst.n() <= kBruteForceMaxN) {
    const ExactResult exact = brute_force(inst);
    score_samples(inst, out, max_cut_value(inst, exact.ground_states.front().x), true);
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

struct P1Terms {
  double first = 0.0;
  double second = 0.0;
};

class P1Evaluator {
 public:
  P1Evaluator(const Instance& inst, double beta, double gamma)
      : inst_(inst), gamma_(gamma), row_i_(static_cast<std::size_t>(inst.n()), 0.0),
        row_j_(static_cast<std::size_t>(inst.n()), 0.0) {
    if (inst.has_field()) throw InvalidParameter("closed-form depth-1 correlations need zero field");
    const double s2b = std::sin(2.0 * beta);
    first_coeff_ = s2b * std::cos(2.0 * beta);
    second_coeff_ = -0.5 * s2b * s2b;
  }

  P1Terms terms(Vertex i, Vertex j) {
    load(i, row_i_);
    load(j, row_j_);
    const double jij = row_i_[static_cast<std::size_t>(j)];
    double pi = 1.0;
    double pj = 1.0;
    double psum = 1.0;
    double pdiff = 1.0;
    std::set<Vertex> ks;
    for (const Incidence& inc : inst_.adjacency(i)) ks.insert(inc.neighbor);
    for (const Incidence& inc : inst_.adjacency(j)) ks.insert(inc.neighbor);
    for (Vertex k : ks) {
      if (k == i || k == j) continue;
      const double jik = row_i_[static_cast<std::size_t>(k)];
      const double jjk = row_j_[static_cast<std::size_t>(k)];
      pi *= std::cos(2.0 * gamma_ * jik);
      pj *= std::cos(2.0 * gamma_ * jjk);
      psum *= std::cos(2.0 * gamma_ * (jik + jjk));
      pdiff *= std::cos(2.0 * gamma_ * (jjk - jik));
    }
    unload(i, row_i_);
    unload(j, row_j_);
    return {first_coeff_ * std::sin(2.0 * gamma_ * jij) * (pi + pj),
            second_coeff_ * (psum - pdiff)};
  }

 private:
  void load(Vertex v, std::vector<double>& row) const {
    for (const Incidence& inc : inst_.adjacency(v)) {
      row[static_cast<std::size_t>(inc.neighbor)] = inst_.edge(inc.edge).coupling();
    }
  }
  void unload(Vertex v, std::vector<double>& row) const {
    for (const Incidence& inc : inst_.adjacency(v)) row[static_cast<std::size_t>(inc.neighbor)] = 0.0;
  }

  const Instance& inst_;
  double gamma_;
  double first_coeff_ = 0.0;
  double second_coeff_ = 0.0;
  std::vector<double> row_i_;
  std::vector<double> row_j_;
};

}  // namespace

CorrelationMatrix qaoa_p1_correlations(const Instance& inst, double beta1, double gamma1) {
  P1Evaluator eval(inst, beta1, gamma1);
  const auto n = static_cast<std::size_t>(inst.n());
  std::vector<double> z(n * n, 0.0);
  for (Vertex i = 0; i < inst.n(); ++i) {
    // Pairs within two hops; every other pair is exactly zero.
    std::set<Vertex> near;
    for (const Incidence& a : inst.adjacency(i)) {
      near.insert(a.neighbor);
      for (const Incidence& b : inst.adjacency(a.neighbor)) near.insert(b.neighbor);
    }
    for (Vertex j : near) {
      if (j <= i) continue;
      const P1Terms t = eval.terms(i, j);
      z[static_cast<std::size_t>(i) * n + static_cast<std::size_t>(j)] =
          z[static_cast<std::size_t>(j) * n + static_cast<std::size_t>(i)] = t.first + t.second;
    }
  }
  return CorrelationMatrix(inst.n(), std::move(z), CorrelationSource::QAOA, 1.0);
}

double qaoa_p1_energy(const Instance& inst, double beta1, double gamma1) {
  P1Evaluator eval(inst, beta1, gamma1);
  double e = 0.0;
  for (const Edge& edge : inst.edges()) {
    const P1Terms t = eval.terms(edge.i, edge.j);
    e -= edge.coupling() * (t.first + t.second);
  }
  return e;
}

QaoaOptimizeResult qaoa_p1_optimize(const Instance& inst, const QaoaOptimizeOptions& opts) {
  P1Evaluator probe(inst, 0.0, 0.0);  // rejects a field up front
  return multistart(1, opts, [&](const QaoaParams& params) {
    return qaoa_p1_energy(inst, params.betas[0], params.gammas[0]);
  });
}

P1TermRatio p1_term_ratio(const Instance& inst, const QaoaParams& params) {
  params.validate();
  if (params.p != 1) throw InvalidParameter("p1_term_ratio needs depth-1 parameters");
  P1Evaluator eval(inst, params.betas[0], params.gammas[0]);
  P1TermRatio out;
  double sum = 0.0;
  for (const Edge& e : inst.edges()) {
    const P1Terms t = eval.terms(e.i, e.j);
    if (std::abs(t.first) < 1e-14) {
      ++out.edges_excluded;
      continue;
    }
    sum += std::abs(t.second) / std::abs(t.first);
    ++out.edges_used;
  }
  out.mean_ratio = out.edges_used == 0 ? std::numeric_limits<double>::quiet_NaN()
                                       : sum / static_cast<double>(out.edges_used);
  return out;
}

}  // namespace cgca
