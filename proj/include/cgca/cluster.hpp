#pragma once

#include <span>
#include <vector>

#include "cgca/correlation.hpp"
#include "cgca/instance.hpp"
#include "cgca/rng.hpp"

namespace cgca {

// How an outside vertex is accepted into a growing cluster: either by the
// correlation-scaled link probability, or by a fixed probability
// ("random clusters").
//
// The link score of a pair is -x_u x_k Z_uk with u inside the cluster. With
// Orientation::Flipped (default) x_u is the spin u will have once the cluster
// is flipped, so vertices whose current relative orientation agrees with the
// correlation sign are pulled in. Orientation::Current uses the spins as they
// are before the flip, which links only pairs that disagree with Z.
struct ClusterPolicy {
  enum class Kind { CorrelationGuided, ConstantProbability };
  enum class Orientation { Flipped, Current };

  Kind kind = Kind::CorrelationGuided;
  double p_const = 0.0;
  Orientation orientation = Orientation::Flipped;

  static ClusterPolicy correlation_guided(Orientation o = Orientation::Flipped) {
    return {Kind::CorrelationGuided, 0.0, o};
  }
  bool is_constant() const noexcept { return kind == Kind::ConstantProbability; }
};

struct PercolationEstimate {
  double lambda_perc = 0.0;
  double mean_abs_z = 0.0;
  double d1 = 0.0;  // <d>
  double d2 = 0.0;  // <d^2>
};

// lambda_perc = <d> / (2 E[|Z| | Z != 0] (<d^2> - <d>)).
// Throws DegenerateTopology when <d^2> == <d>, DegenerateCorrelation when Z
// has no nonzero off-diagonal entry.
PercolationEstimate percolation_lambda(const Instance& inst, const CorrelationMatrix& z);

// min(1, max(0, lambda_scale / lambda_perc * score)).
double link_probability(double score, double lambda_scale, double lambda_perc);

// Everything cluster growth needs besides the current spins. `z` may be null
// for a constant-probability policy.
struct ClusterContext {
  const Instance* inst = nullptr;
  const CorrelationMatrix* z = nullptr;
  double lambda_scale = 1.0;
  double lambda_perc = 1.0;
  ClusterPolicy policy;

  // Validates the pieces and computes lambda_perc from (inst, z) when the
  // policy is correlation guided.
  static ClusterContext make(const Instance& inst, const CorrelationMatrix* z,
                             double lambda_scale, ClusterPolicy policy);
};

struct Cluster {
  std::vector<Vertex> members;    // seed first, then in order of acceptance
  std::vector<int> removed_edges;  // edges deleted by rejections
};

// One aggregated boundary entry: all live edges between the cluster and an
// outside vertex, with their summed coupling and link score.
struct BoundaryEntry {
  Vertex vertex = 0;
  double coupling_sum = 0.0;
  double score = 0.0;  // sum over live edges {u,k} of -x_u x_k Z_uk
  std::vector<int> edges;
};

// Frontier-based cluster growth with supernode shrinking. Reusable across
// constructions on the same instance; holds O(n + m) scratch space.
//
// Each step picks a live boundary vertex uniformly at random and accepts it
// with the link probability of its aggregated score. Accepting merges the
// vertex and adds its outside edges to the boundary; rejecting deletes the
// edges that currently join it to the cluster. Every edge is consumed at most
// once, so growth terminates.
class ClusterBuilder {
 public:
  explicit ClusterBuilder(const ClusterContext& ctx);

  void start(std::span<const Spin> x, Vertex seed);
  // One accept/reject decision. Returns false once the boundary is empty.
  bool step(Rng& rng);
  void grow(Rng& rng) {
    while (step(rng)) {
    }
  }

  std::span<const Vertex> members() const noexcept { return members_; }
  std::span<const int> removed_edges() const noexcept { return removed_; }
  bool contains(Vertex v) const { return in_cluster_[static_cast<std::size_t>(v)] != 0; }
  std::vector<BoundaryEntry> boundary() const;

  // Recomputes the boundary from members, original edges and removed edges
  // and compares it with the incremental state.
  bool consistent() const;

  Cluster cluster() const { return {members_, removed_}; }

 private:
  void add_edge_to_boundary(Vertex outside, Vertex inside, int edge);
  void drop_from_frontier(Vertex k);
  double pair_score(Vertex u, Vertex k) const;

  ClusterContext ctx_;
  std::span<const Spin> x_;

  std::vector<char> in_cluster_;
  std::vector<Vertex> members_;
  std::vector<int> removed_;

  // Frontier of boundary vertices with O(1) uniform pick and removal.
  std::vector<Vertex> frontier_;
  std::vector<int> slot_;  // position in frontier_, -1 if absent
  std::vector<double> score_;
  std::vector<double> jsum_;
  // Per-vertex singly linked lists of live boundary edges.
  std::vector<int> head_;
  std::vector<int> next_;
};

Cluster create_cluster(const ClusterContext& ctx, std::span<const Spin> x, Vertex seed,
                       Rng& rng);

}  // namespace cgca
