#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include "cgca/rng.hpp"

namespace cgca {

using Vertex = int;
using Spin = std::int8_t;

struct Edge {
  Vertex i;
  Vertex j;
  double weight;  // Max-Cut weight A_ij

  // Ising coupling. Minimizing H = -sum J x_i x_j maximizes the cut.
  double coupling() const noexcept { return -weight; }

  friend bool operator==(const Edge&, const Edge&) = default;
};

struct Incidence {
  Vertex neighbor;
  int edge;
};

// Weighted undirected simple graph, immutable after construction. Optionally
// carries a per-vertex magnetic field h (energy term -sum h_i x_i).
class Instance {
 public:
  Instance() = default;

  // Edges are normalized to i < j. Throws InvalidParameter on self-loops,
  // duplicates, out-of-range ids or a field of the wrong length.
  Instance(int n, std::vector<Edge> edges, std::vector<double> field = {});

  int n() const noexcept { return n_; }
  std::size_t num_edges() const noexcept { return edges_.size(); }
  std::span<const Edge> edges() const noexcept { return edges_; }
  const Edge& edge(int e) const { return edges_[static_cast<std::size_t>(e)]; }
  std::span<const Incidence> adjacency(Vertex v) const {
    return adjacency_[static_cast<std::size_t>(v)];
  }
  int degree(Vertex v) const {
    return static_cast<int>(adjacency_[static_cast<std::size_t>(v)].size());
  }

  bool has_field() const noexcept { return !field_.empty(); }
  // Zero-filled view is not materialized; use field_at().
  std::span<const double> field() const noexcept { return field_; }
  double field_at(Vertex v) const {
    return field_.empty() ? 0.0 : field_[static_cast<std::size_t>(v)];
  }

  // Sum of A_ij.
  double total_weight() const noexcept { return total_weight_; }
  // Sum of |J_ij| (field excluded).
  double total_abs_coupling() const noexcept { return total_abs_weight_; }
  // First and second moments of the degree sequence.
  double mean_degree() const noexcept { return d1_; }
  double mean_sq_degree() const noexcept { return d2_; }

  // Coupling between u and v, zero when not adjacent. O(deg(u)).
  double coupling_between(Vertex u, Vertex v) const;

  bool integer_weights() const noexcept { return integer_weights_; }

  friend bool operator==(const Instance& a, const Instance& b) {
    return a.n_ == b.n_ && a.edges_ == b.edges_ && a.field_ == b.field_;
  }

 private:
  int n_ = 0;
  std::vector<Edge> edges_;
  std::vector<std::vector<Incidence>> adjacency_;
  std::vector<double> field_;
  double total_weight_ = 0.0;
  double total_abs_weight_ = 0.0;
  double d1_ = 0.0;
  double d2_ = 0.0;
  bool integer_weights_ = true;
};

struct SpinConfig {
  std::vector<Spin> x;
  double energy = 0.0;  // cached H(x)
};

// Simple d-regular graph from the pairing model with restart on self-loops or
// multi-edges, and i.i.d. uniform +-1 weights.
Instance generate_regular(int n, int d, std::uint64_t seed);

// H(x) = -sum J_ij x_i x_j - sum h_i x_i.
double energy(const Instance& inst, std::span<const Spin> x);
// C(x) = 1/2 sum A_ij (1 - x_i x_j).
double max_cut_value(const Instance& inst, std::span<const Spin> x);

// (e - E_min^id) / (E_max^id - E_min^id) with E^id = -/+ (sum |J| + sum |h|).
double misfit(const Instance& inst, double e);

double magnetization(std::span<const Spin> x);

SpinConfig make_config(const Instance& inst, std::vector<Spin> x);
SpinConfig random_config(const Instance& inst, Rng& rng);

// Hop distances from `source`; -1 for unreachable vertices.
std::vector<int> bfs_distances(const Instance& inst, Vertex source);

Instance read_instance(const std::filesystem::path& path);
void write_instance(const Instance& inst, const std::filesystem::path& path);

}  // namespace cgca
