#include "cgca/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "cgca/error.hpp"

namespace cgca {

PercolationEstimate percolation_lambda(const Instance& inst, const CorrelationMatrix& z) {
  if (z.n() != inst.n()) throw InvalidParameter("correlation matrix size does not match instance");
  PercolationEstimate est;
  est.d1 = inst.mean_degree();
  est.d2 = inst.mean_sq_degree();
  est.mean_abs_z = z.mean_abs_nonzero();
  if (!(est.d2 > est.d1)) {
    throw DegenerateTopology("percolation estimate undefined: <d^2> == <d>");
  }
  if (!(est.mean_abs_z > 0.0)) {
    throw DegenerateCorrelation("percolation estimate undefined: correlation matrix is zero");
  }
  est.lambda_perc = est.d1 / (2.0 * est.mean_abs_z * (est.d2 - est.d1));
  return est;
}

double link_probability(double score, double lambda_scale, double lambda_perc) {
  if (!(lambda_perc > 0.0)) throw InvalidParameter("lambda_perc must be positive");
  return std::min(1.0, std::max(0.0, lambda_scale / lambda_perc * score));
}

ClusterContext ClusterContext::make(const Instance& inst, const CorrelationMatrix* z,
                                    double lambda_scale, ClusterPolicy policy) {
  ClusterContext ctx;
  ctx.inst = &inst;
  ctx.z = z;
  ctx.lambda_scale = lambda_scale;
  ctx.policy = policy;
  if (policy.is_constant()) {
    if (!(policy.p_const >= 0.0 && policy.p_const <= 1.0)) {
      throw InvalidParameter("constant link probability must lie in [0,1]");
    }
    ctx.lambda_perc = 1.0;
    return ctx;
  }
  if (z == nullptr) throw InvalidParameter("correlation-guided clusters need a correlation matrix");
  if (!(lambda_scale >= 0.0)) throw InvalidParameter("lambda_scale must be >= 0");
  ctx.lambda_perc = percolation_lambda(inst, *z).lambda_perc;
  return ctx;
}

ClusterBuilder::ClusterBuilder(const ClusterContext& ctx) : ctx_(ctx) {
  const auto n = static_cast<std::size_t>(ctx_.inst->n());
  in_cluster_.assign(n, 0);
  slot_.assign(n, -1);
  score_.assign(n, 0.0);
  jsum_.assign(n, 0.0);
  head_.assign(n, -1);
  next_.assign(ctx_.inst->num_edges(), -1);
  members_.reserve(n);
  frontier_.reserve(n);
}

double ClusterBuilder::pair_score(Vertex u, Vertex k) const {
  if (ctx_.z == nullptr) return 0.0;
  const double inside = ctx_.policy.orientation == ClusterPolicy::Orientation::Flipped ? -1.0 : 1.0;
  return -inside * static_cast<double>(x_[static_cast<std::size_t>(u)] * x_[static_cast<std::size_t>(k)]) *
         (*ctx_.z)(u, k);
}

void ClusterBuilder::add_edge_to_boundary(Vertex outside, Vertex inside, int edge) {
  const auto k = static_cast<std::size_t>(outside);
  if (slot_[k] < 0) {
    slot_[k] = static_cast<int>(frontier_.size());
    frontier_.push_back(outside);
    score_[k] = 0.0;
    jsum_[k] = 0.0;
    head_[k] = -1;
  }
  score_[k] += pair_score(inside, outside);
  jsum_[k] += ctx_.inst->edge(edge).coupling();
  next_[static_cast<std::size_t>(edge)] = head_[k];
  head_[k] = edge;
}

void ClusterBuilder::drop_from_frontier(Vertex k) {
  const auto uk = static_cast<std::size_t>(k);
  const int pos = slot_[uk];
  const Vertex last = frontier_.back();
  frontier_[static_cast<std::size_t>(pos)] = last;
  slot_[static_cast<std::size_t>(last)] = pos;
  frontier_.pop_back();
  slot_[uk] = -1;
}

void ClusterBuilder::start(std::span<const Spin> x, Vertex seed) {
  if (x.size() != in_cluster_.size()) throw InvalidParameter("spin configuration length mismatch");
  if (seed < 0 || seed >= ctx_.inst->n()) throw InvalidParameter("seed vertex out of range");
  for (Vertex v : members_) in_cluster_[static_cast<std::size_t>(v)] = 0;
  for (Vertex v : frontier_) slot_[static_cast<std::size_t>(v)] = -1;
  members_.clear();
  frontier_.clear();
  removed_.clear();
  x_ = x;

  members_.push_back(seed);
  in_cluster_[static_cast<std::size_t>(seed)] = 1;
  for (const Incidence& inc : ctx_.inst->adjacency(seed)) {
    add_edge_to_boundary(inc.neighbor, seed, inc.edge);
  }
}

bool ClusterBuilder::step(Rng& rng) {
  if (frontier_.empty()) return false;
  const Vertex k = frontier_[uniform_index(rng, frontier_.size())];
  const auto uk = static_cast<std::size_t>(k);

  const double p = ctx_.policy.is_constant()
                       ? ctx_.policy.p_const
                       : link_probability(score_[uk], ctx_.lambda_scale, ctx_.lambda_perc);
  const bool accept = uniform01(rng) < p;
  drop_from_frontier(k);

  if (accept) {
    // The aggregated edges become internal to the supernode.
    members_.push_back(k);
    in_cluster_[uk] = 1;
    for (const Incidence& inc : ctx_.inst->adjacency(k)) {
      if (in_cluster_[static_cast<std::size_t>(inc.neighbor)] != 0) continue;
      add_edge_to_boundary(inc.neighbor, k, inc.edge);
    }
  } else {
    for (int e = head_[uk]; e >= 0; e = next_[static_cast<std::size_t>(e)]) removed_.push_back(e);
  }
  head_[uk] = -1;
  return true;
}

std::vector<BoundaryEntry> ClusterBuilder::boundary() const {
  std::vector<BoundaryEntry> out;
  out.reserve(frontier_.size());
  for (Vertex k : frontier_) {
    const auto uk = static_cast<std::size_t>(k);
    BoundaryEntry entry{k, jsum_[uk], score_[uk], {}};
    for (int e = head_[uk]; e >= 0; e = next_[static_cast<std::size_t>(e)]) {
      entry.edges.push_back(e);
    }
    std::sort(entry.edges.begin(), entry.edges.end());
    out.push_back(std::move(entry));
  }
  std::sort(out.begin(), out.end(),
            [](const BoundaryEntry& a, const BoundaryEntry& b) { return a.vertex < b.vertex; });
  return out;
}

bool ClusterBuilder::consistent() const {
  std::vector<char> removed(ctx_.inst->num_edges(), 0);
  for (int e : removed_) removed[static_cast<std::size_t>(e)] = 1;

  std::map<Vertex, BoundaryEntry> expected;
  for (Vertex u : members_) {
    for (const Incidence& inc : ctx_.inst->adjacency(u)) {
      if (contains(inc.neighbor) || removed[static_cast<std::size_t>(inc.edge)] != 0) continue;
      auto& entry = expected[inc.neighbor];
      entry.vertex = inc.neighbor;
      entry.coupling_sum += ctx_.inst->edge(inc.edge).coupling();
      entry.score += pair_score(u, inc.neighbor);
      entry.edges.push_back(inc.edge);
    }
  }
  const auto actual = boundary();
  if (actual.size() != expected.size()) return false;
  std::size_t idx = 0;
  for (auto& [v, entry] : expected) {
    const BoundaryEntry& got = actual[idx++];
    std::sort(entry.edges.begin(), entry.edges.end());
    if (got.vertex != v || got.edges != entry.edges) return false;
    if (contains(got.vertex)) return false;
    const double tol = 1e-12 * (1.0 + static_cast<double>(entry.edges.size()));
    if (std::abs(got.score - entry.score) > tol) return false;
    if (std::abs(got.coupling_sum - entry.coupling_sum) > tol) return false;
  }
  return true;
}

Cluster create_cluster(const ClusterContext& ctx, std::span<const Spin> x, Vertex seed,
                       Rng& rng) {
  ClusterBuilder builder(ctx);
  builder.start(x, seed);
  builder.grow(rng);
  return builder.cluster();
}

}  // namespace cgca
