#include "cgca/exact.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <thread>

#include "cgca/error.hpp"

namespace cgca {

namespace {

// Vertices enumerated by the Gray code. Without a field vertex 0 is pinned
// to +1 so each Z2 pair is visited once.
std::vector<Vertex> free_vertices(const Instance& inst) {
  std::vector<Vertex> free;
  for (Vertex v = inst.has_field() ? 0 : 1; v < inst.n(); ++v) free.push_back(v);
  return free;
}

// Incremental state of a Gray-code walk.
class GrayWalker {
 public:
  GrayWalker(const Instance& inst, const std::vector<Vertex>& free, std::uint64_t start)
      : inst_(inst), free_(free), x_(static_cast<std::size_t>(inst.n()), Spin{1}) {
    const std::uint64_t code = start ^ (start >> 1);
    for (std::size_t b = 0; b < free_.size(); ++b) {
      if ((code >> b) & 1U) x_[static_cast<std::size_t>(free_[b])] = -1;
    }
    energy_ = cgca::energy(inst_, x_);
    local_.assign(x_.size(), 0.0);
    for (Vertex v = 0; v < inst_.n(); ++v) {
      double f = inst_.field_at(v);
      for (const Incidence& inc : inst_.adjacency(v)) {
        f += inst_.edge(inc.edge).coupling() * x_[static_cast<std::size_t>(inc.neighbor)];
      }
      local_[static_cast<std::size_t>(v)] = f;
    }
  }

  // Advance from state s-1 to state s (s >= 1).
  void step(std::uint64_t s) {
    const auto bit = static_cast<std::size_t>(std::countr_zero(s));
    const Vertex v = free_[bit];
    const auto uv = static_cast<std::size_t>(v);
    energy_ += 2.0 * x_[uv] * local_[uv];
    x_[uv] = static_cast<Spin>(-x_[uv]);
    const double twice = 2.0 * x_[uv];
    for (const Incidence& inc : inst_.adjacency(v)) {
      local_[static_cast<std::size_t>(inc.neighbor)] += inst_.edge(inc.edge).coupling() * twice;
    }
  }

  double energy() const noexcept { return energy_; }
  const std::vector<Spin>& spins() const noexcept { return x_; }

 private:
  const Instance& inst_;
  const std::vector<Vertex>& free_;
  std::vector<Spin> x_;
  std::vector<double> local_;
  double energy_ = 0.0;
};

struct BlockResult {
  double e_min = std::numeric_limits<double>::infinity();
  double e_max = -std::numeric_limits<double>::infinity();
  std::uint64_t count = 0;
  std::vector<std::uint64_t> states;  // enumeration indices of ground states
};

BlockResult scan_block(const Instance& inst, const std::vector<Vertex>& free,
                       std::uint64_t begin, std::uint64_t end, double tol) {
  BlockResult r;
  if (begin >= end) return r;
  GrayWalker walker(inst, free, begin);
  for (std::uint64_t s = begin;; ) {
    const double e = walker.energy();
    if (e < r.e_min - tol) {
      r.e_min = e;
      r.count = 1;
      r.states.assign(1, s);
    } else if (e <= r.e_min + tol) {
      ++r.count;
      if (r.states.size() < kMaxStoredGroundStates) r.states.push_back(s);
    }
    r.e_max = std::max(r.e_max, e);
    if (++s == end) break;
    walker.step(s);
  }
  return r;
}

std::vector<Spin> config_of(const Instance& inst, const std::vector<Vertex>& free,
                            std::uint64_t s) {
  std::vector<Spin> x(static_cast<std::size_t>(inst.n()), Spin{1});
  const std::uint64_t code = s ^ (s >> 1);
  for (std::size_t b = 0; b < free.size(); ++b) {
    if ((code >> b) & 1U) x[static_cast<std::size_t>(free[b])] = -1;
  }
  return x;
}

double tie_tolerance(const Instance& inst) {
  if (inst.integer_weights()) return 0.0;
  double scale = inst.total_abs_coupling();
  for (double h : inst.field()) scale += std::abs(h);
  return 1e-9 * (1.0 + scale);
}

}  // namespace

ExactResult brute_force(const Instance& inst, int threads) {
  if (inst.n() > kBruteForceMaxN) {
    throw SizeLimit("brute_force: n=" + std::to_string(inst.n()) + " exceeds " +
                    std::to_string(kBruteForceMaxN));
  }
  if (inst.n() == 0) return {0.0, 0.0, {SpinConfig{}}, 1};

  const auto free = free_vertices(inst);
  const std::uint64_t total = std::uint64_t{1} << free.size();
  const double tol = tie_tolerance(inst);
  const auto workers = static_cast<std::uint64_t>(std::clamp(threads, 1, 64));
  const std::uint64_t nblocks = std::min<std::uint64_t>(workers, total);

  std::vector<BlockResult> blocks(nblocks);
  auto run = [&](std::uint64_t b) {
    const std::uint64_t begin = total * b / nblocks;
    const std::uint64_t end = total * (b + 1) / nblocks;
    blocks[b] = scan_block(inst, free, begin, end, tol);
  };
  if (nblocks == 1) {
    run(0);
  } else {
    std::vector<std::jthread> pool;
    for (std::uint64_t b = 0; b < nblocks; ++b) pool.emplace_back(run, b);
  }

  ExactResult result;
  result.e_min = std::numeric_limits<double>::infinity();
  result.e_max = -std::numeric_limits<double>::infinity();
  for (const auto& b : blocks) {
    result.e_min = std::min(result.e_min, b.e_min);
    result.e_max = std::max(result.e_max, b.e_max);
  }
  for (const auto& b : blocks) {
    if (b.count == 0 || b.e_min > result.e_min + tol) continue;
    result.degeneracy += b.count;
    for (std::uint64_t s : b.states) {
      if (result.ground_states.size() >= kMaxStoredGroundStates) break;
      result.ground_states.push_back(make_config(inst, config_of(inst, free, s)));
    }
  }
  result.e_min = result.ground_states.front().energy;
  return result;
}

CorrelationMatrix exact_boltzmann_correlations(const Instance& inst, double beta_s) {
  if (inst.n() > kBoltzmannMaxN) {
    throw SizeLimit("exact_boltzmann_correlations: n=" + std::to_string(inst.n()) +
                    " exceeds " + std::to_string(kBoltzmannMaxN));
  }
  if (!(beta_s >= 0.0)) throw InvalidParameter("beta_s must be >= 0");
  const int n = inst.n();
  const auto un = static_cast<std::size_t>(n);
  if (n == 0) return CorrelationMatrix(0, {}, CorrelationSource::MC, beta_s);

  const auto free = free_vertices(inst);
  const std::uint64_t total = std::uint64_t{1} << free.size();

  std::vector<double> energies(total);
  {
    GrayWalker walker(inst, free, 0);
    energies[0] = walker.energy();
    for (std::uint64_t s = 1; s < total; ++s) {
      walker.step(s);
      energies[s] = walker.energy();
    }
  }
  const double e_min = *std::min_element(energies.begin(), energies.end());

  std::vector<double> acc(un * un, 0.0);
  double partition = 0.0;
  GrayWalker walker(inst, free, 0);
  for (std::uint64_t s = 0; s < total; ++s) {
    if (s > 0) walker.step(s);
    const double w = std::exp(-beta_s * (energies[s] - e_min));
    partition += w;
    const auto& x = walker.spins();
    for (std::size_t i = 0; i < un; ++i) {
      const double wi = w * x[i];
      double* row = &acc[i * un];
      for (std::size_t j = i + 1; j < un; ++j) row[j] += wi * x[j];
    }
  }
  std::vector<double> z(un * un, 0.0);
  for (std::size_t i = 0; i < un; ++i) {
    for (std::size_t j = i + 1; j < un; ++j) {
      z[i * un + j] = z[j * un + i] = acc[i * un + j] / partition;
    }
  }
  return CorrelationMatrix(n, std::move(z), CorrelationSource::MC, beta_s);
}

}  // namespace cgca
