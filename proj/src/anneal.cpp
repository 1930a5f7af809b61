#include "cgca/anneal.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>

#include "cgca/error.hpp"

namespace cgca {

namespace {

// Membership-mask form used on the hot path; `mask` must flag exactly the
// listed members.
double delta_energy_masked(const Instance& inst, std::span<const Spin> x,
                           std::span<const Vertex> members, const std::vector<char>& mask) {
  double de = 0.0;
  for (Vertex i : members) {
    const auto ui = static_cast<std::size_t>(i);
    double boundary = 0.0;
    for (const Incidence& inc : inst.adjacency(i)) {
      if (mask[static_cast<std::size_t>(inc.neighbor)] == 0) {
        boundary += inst.edge(inc.edge).coupling() * x[static_cast<std::size_t>(inc.neighbor)];
      }
    }
    de += 2.0 * x[ui] * (boundary + inst.field_at(i));
  }
  return de;
}

void check_schedule(double beta_f, std::uint64_t m) {
  if (m < 2) throw InvalidParameter("iteration budget m must be >= 2");
  if (!(beta_f > 0.0) || !std::isfinite(beta_f)) throw InvalidParameter("beta_f must be positive");
}

double schedule_beta(double beta_f, std::uint64_t consumed, std::uint64_t m) {
  // beta_f * k / k can round below beta_f, which would never end the run.
  if (consumed >= m - 1) return beta_f;
  return beta_f * static_cast<double>(consumed) / static_cast<double>(m - 1);
}

void verify(const Instance& inst, const SpinConfig& state) {
  const double fresh = energy(inst, state.x);
  const double tol = inst.integer_weights() ? 0.0 : 1e-9 * (1.0 + inst.total_abs_coupling());
  if (std::abs(fresh - state.energy) > tol) {
    throw Error("cached energy " + std::to_string(state.energy) + " differs from " +
                std::to_string(fresh));
  }
}

}  // namespace

double delta_energy(const Instance& inst, std::span<const Spin> x, std::span<const Vertex> members) {
  if (x.size() != static_cast<std::size_t>(inst.n())) throw InvalidParameter("configuration length mismatch");
  std::vector<char> mask(x.size(), 0);
  std::vector<Vertex> unique;
  unique.reserve(members.size());
  for (Vertex v : members) {
    if (v < 0 || v >= inst.n()) throw InvalidParameter("cluster member out of range");
    if (mask[static_cast<std::size_t>(v)] == 0) {
      mask[static_cast<std::size_t>(v)] = 1;
      unique.push_back(v);
    }
  }
  return delta_energy_masked(inst, x, unique, mask);
}

RunRecord run_ca(const ClusterContext& ctx, double beta_f, std::uint64_t m, std::uint64_t seed,
                 const RunOptions& opts) {
  check_schedule(beta_f, m);
  const Instance& inst = *ctx.inst;
  if (inst.n() == 0) throw InvalidParameter("run_ca: empty instance");
  const auto t0 = std::chrono::steady_clock::now();

  Rng rng(seed);
  RunRecord rec;
  SpinConfig state = random_config(inst, rng);
  rec.e_best = state.energy;
  rec.x_best = state;
  rec.schedule = {0.0, beta_f, m, 0};

  ClusterBuilder builder(ctx);
  std::vector<char> mask(static_cast<std::size_t>(inst.n()), 0);
  const std::uint64_t budget = m - 1;

  while (rec.schedule.active()) {
    const double beta = rec.schedule.beta;
    const auto seed_vertex = static_cast<Vertex>(uniform_index(rng, static_cast<std::uint64_t>(inst.n())));
    builder.start(state.x, seed_vertex);
    builder.grow(rng);
    const auto members = builder.members();

    for (Vertex v : members) mask[static_cast<std::size_t>(v)] = 1;
    const double de = delta_energy_masked(inst, state.x, members, mask);
    for (Vertex v : members) mask[static_cast<std::size_t>(v)] = 0;

    bool accept = false;
    if (de <= 0.0) {
      accept = true;
    } else {
      accept = uniform01(rng) < std::exp(-beta * de);
    }
    if (accept) {
      for (Vertex v : members) {
        auto& s = state.x[static_cast<std::size_t>(v)];
        s = static_cast<Spin>(-s);
      }
      state.energy += de;
      ++rec.accepted;
      if (opts.verify_energy) verify(inst, state);
      if (de <= 0.0 && state.energy < rec.e_best) {
        rec.e_best = state.energy;
        rec.x_best = state;
      }
    }

    const auto size = static_cast<std::uint64_t>(members.size());
    ++rec.evaluations;
    rec.flipped_spins += size;
    if (opts.record_events && beta >= opts.window_lo && beta <= opts.window_hi) {
      rec.events.push_back({beta, static_cast<int>(size), de, accept});
    }
    rec.schedule.consumed = std::min(budget, rec.schedule.consumed + size);
    rec.schedule.beta = schedule_beta(beta_f, rec.schedule.consumed, m);
  }

  rec.e_final = state.energy;
  rec.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

RunRecord run_ca(const Instance& inst, const CorrelationMatrix* z, double beta_f, std::uint64_t m,
                 double lambda_scale, ClusterPolicy policy, std::uint64_t seed,
                 const RunOptions& opts) {
  return run_ca(ClusterContext::make(inst, z, lambda_scale, policy), beta_f, m, seed, opts);
}

RunRecord run_sa(const Instance& inst, double beta_f, std::uint64_t m, std::uint64_t seed,
                 const RunOptions& opts) {
  check_schedule(beta_f, m);
  if (inst.n() == 0) throw InvalidParameter("run_sa: empty instance");
  const auto t0 = std::chrono::steady_clock::now();

  Rng rng(seed);
  RunRecord rec;
  SpinConfig state = random_config(inst, rng);
  rec.e_best = state.energy;
  rec.x_best = state;
  rec.schedule = {0.0, beta_f, m, 0};

  auto& x = state.x;
  std::vector<double> local(static_cast<std::size_t>(inst.n()));
  for (Vertex v = 0; v < inst.n(); ++v) {
    double f = inst.field_at(v);
    for (const Incidence& inc : inst.adjacency(v)) {
      f += inst.edge(inc.edge).coupling() * x[static_cast<std::size_t>(inc.neighbor)];
    }
    local[static_cast<std::size_t>(v)] = f;
  }

  for (std::uint64_t t = 0; t < m; ++t) {
    const double beta = schedule_beta(beta_f, t, m);
    rec.schedule.beta = beta;
    const auto v = static_cast<Vertex>(uniform_index(rng, static_cast<std::uint64_t>(inst.n())));
    const auto uv = static_cast<std::size_t>(v);
    const double de = 2.0 * x[uv] * local[uv];
    const bool accept = de <= 0.0 || uniform01(rng) < std::exp(-beta * de);
    if (accept) {
      x[uv] = static_cast<Spin>(-x[uv]);
      state.energy += de;
      const double twice = 2.0 * x[uv];
      for (const Incidence& inc : inst.adjacency(v)) {
        local[static_cast<std::size_t>(inc.neighbor)] += inst.edge(inc.edge).coupling() * twice;
      }
      ++rec.accepted;
      if (opts.verify_energy) verify(inst, state);
      if (state.energy < rec.e_best) {
        rec.e_best = state.energy;
        rec.x_best = state;
      }
    }
    ++rec.evaluations;
    ++rec.flipped_spins;
    if (opts.record_events && beta >= opts.window_lo && beta <= opts.window_hi) {
      rec.events.push_back({beta, 1, de, accept});
    }
    rec.schedule.consumed = t;
  }
  rec.schedule.beta = schedule_beta(beta_f, rec.schedule.consumed, m);

  rec.e_final = state.energy;
  rec.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rec;
}

double sorted_quantile(std::span<const double> sorted, double q) {
  if (sorted.empty()) throw InvalidParameter("quantile of an empty sample");
  const double pos = q * static_cast<double>(sorted.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, sorted.size() - 1);
  const double frac = pos - static_cast<double>(lo);
  return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

AcceptanceSummary summarize_rates(std::vector<double> rates) {
  if (rates.empty()) throw InvalidParameter("no acceptance events in the window");
  AcceptanceSummary s;
  s.rates = rates;
  std::sort(rates.begin(), rates.end());
  s.median = sorted_quantile(rates, 0.5);
  s.q1 = sorted_quantile(rates, 0.25);
  s.q3 = sorted_quantile(rates, 0.75);
  s.min = rates.front();
  s.max = rates.back();
  s.mean = std::accumulate(rates.begin(), rates.end(), 0.0) / static_cast<double>(rates.size());
  return s;
}

AcceptanceSummary acceptance_statistics(std::span<const RunRecord> records, double window_lo,
                                        double window_hi) {
  if (records.empty()) throw InvalidParameter("acceptance_statistics: no records");
  if (!(window_lo <= window_hi)) throw InvalidParameter("acceptance window is empty");
  std::vector<double> rates;
  for (const RunRecord& rec : records) {
    std::size_t total = 0;
    std::size_t accepted = 0;
    for (const AcceptanceEvent& ev : rec.events) {
      if (ev.beta < window_lo || ev.beta > window_hi) continue;
      ++total;
      if (ev.accepted) ++accepted;
    }
    if (total > 0) rates.push_back(static_cast<double>(accepted) / static_cast<double>(total));
  }
  return summarize_rates(std::move(rates));
}

}  // namespace cgca
