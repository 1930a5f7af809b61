#include "cgca/instance.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <queue>
#include <set>
#include <sstream>
#include <string>
#include <string_view>

#include "cgca/error.hpp"
#include "cgca/text.hpp"

namespace cgca {

using text::format_double;
using text::parse_number;
using text::split_ws;

Instance::Instance(int n, std::vector<Edge> edges, std::vector<double> field)
    : n_(n), edges_(std::move(edges)), field_(std::move(field)) {
  if (n < 0) throw InvalidParameter("vertex count must be non-negative");
  if (!field_.empty() && field_.size() != static_cast<std::size_t>(n)) {
    throw InvalidParameter("field length " + std::to_string(field_.size()) +
                           " does not match n=" + std::to_string(n));
  }
  if (std::all_of(field_.begin(), field_.end(), [](double h) { return h == 0.0; })) {
    field_.clear();
  }

  adjacency_.assign(static_cast<std::size_t>(n), {});
  std::set<std::pair<Vertex, Vertex>> seen;
  for (std::size_t e = 0; e < edges_.size(); ++e) {
    Edge& ed = edges_[e];
    if (ed.i > ed.j) std::swap(ed.i, ed.j);
    if (ed.i < 0 || ed.j >= n) {
      throw InvalidParameter("edge (" + std::to_string(ed.i) + "," + std::to_string(ed.j) +
                             ") out of range for n=" + std::to_string(n));
    }
    if (ed.i == ed.j) throw InvalidParameter("self-loop at vertex " + std::to_string(ed.i));
    if (!std::isfinite(ed.weight)) throw InvalidParameter("non-finite edge weight");
    if (!seen.emplace(ed.i, ed.j).second) {
      throw InvalidParameter("duplicate edge (" + std::to_string(ed.i) + "," +
                             std::to_string(ed.j) + ")");
    }
    adjacency_[static_cast<std::size_t>(ed.i)].push_back({ed.j, static_cast<int>(e)});
    adjacency_[static_cast<std::size_t>(ed.j)].push_back({ed.i, static_cast<int>(e)});
    total_weight_ += ed.weight;
    total_abs_weight_ += std::abs(ed.weight);
    if (ed.weight != std::round(ed.weight)) integer_weights_ = false;
  }
  for (double h : field_) {
    if (h != std::round(h)) integer_weights_ = false;
  }

  if (n > 0) {
    double s1 = 0.0;
    double s2 = 0.0;
    for (const auto& adj : adjacency_) {
      const auto d = static_cast<double>(adj.size());
      s1 += d;
      s2 += d * d;
    }
    d1_ = s1 / n;
    d2_ = s2 / n;
  }
}

double Instance::coupling_between(Vertex u, Vertex v) const {
  for (const Incidence& inc : adjacency(u)) {
    if (inc.neighbor == v) return edge(inc.edge).coupling();
  }
  return 0.0;
}

namespace {

constexpr int kMaxRestarts = 10000;

// One attempt at a random simple d-regular graph: stubs are paired one at a
// time, rejecting pairs that would create a loop or a multi-edge.
bool try_pairing(int n, int d, Rng& rng, std::vector<std::pair<Vertex, Vertex>>& out) {
  out.clear();
  std::vector<Vertex> stubs;
  stubs.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(d));
  for (Vertex v = 0; v < n; ++v) {
    for (int k = 0; k < d; ++k) stubs.push_back(v);
  }
  std::set<std::pair<Vertex, Vertex>> used;
  while (!stubs.empty()) {
    // Give up on this attempt after a bounded number of bad draws.
    const std::size_t max_draws = 50 * stubs.size() + 100;
    bool paired = false;
    for (std::size_t draw = 0; draw < max_draws; ++draw) {
      const auto a = uniform_index(rng, stubs.size());
      const auto b = uniform_index(rng, stubs.size());
      if (a == b) continue;
      Vertex u = stubs[a];
      Vertex v = stubs[b];
      if (u == v) continue;
      if (u > v) std::swap(u, v);
      if (used.contains({u, v})) continue;
      used.emplace(u, v);
      out.emplace_back(u, v);
      // Remove the larger index first so the smaller stays valid.
      for (auto idx : {std::max(a, b), std::min(a, b)}) {
        stubs[idx] = stubs.back();
        stubs.pop_back();
      }
      paired = true;
      break;
    }
    if (!paired) return false;
  }
  return true;
}

}  // namespace

Instance generate_regular(int n, int d, std::uint64_t seed) {
  if (n <= 0 || d < 0) throw InvalidParameter("generate_regular: n must be positive, d >= 0");
  if (d >= n) throw InvalidParameter("generate_regular: degree must be below n");
  if ((static_cast<long long>(n) * d) % 2 != 0) {
    throw InvalidParameter("generate_regular: n*d must be even");
  }
  Rng rng(seed);

  // Dense requests are built as the complement of a sparse regular graph.
  const bool complement = d > (n - 1) / 2;
  const int build_degree = complement ? n - 1 - d : d;

  std::vector<std::pair<Vertex, Vertex>> pairs;
  bool ok = false;
  for (int attempt = 0; attempt < kMaxRestarts && !ok; ++attempt) {
    ok = try_pairing(n, build_degree, rng, pairs);
  }
  if (!ok) {
    throw GenerationFailure("generate_regular: no simple " + std::to_string(d) +
                            "-regular graph on " + std::to_string(n) + " vertices after " +
                            std::to_string(kMaxRestarts) + " restarts");
  }

  if (complement) {
    std::set<std::pair<Vertex, Vertex>> absent(pairs.begin(), pairs.end());
    pairs.clear();
    for (Vertex u = 0; u < n; ++u) {
      for (Vertex v = u + 1; v < n; ++v) {
        if (!absent.contains({u, v})) pairs.emplace_back(u, v);
      }
    }
  }
  std::sort(pairs.begin(), pairs.end());

  std::vector<Edge> edges;
  edges.reserve(pairs.size());
  for (auto [u, v] : pairs) {
    edges.push_back({u, v, (rng() >> 63) != 0U ? 1.0 : -1.0});
  }
  return Instance(n, std::move(edges));
}

namespace {

void check_length(const Instance& inst, std::span<const Spin> x) {
  if (x.size() != static_cast<std::size_t>(inst.n())) {
    throw InvalidParameter("configuration length " + std::to_string(x.size()) +
                           " does not match n=" + std::to_string(inst.n()));
  }
}

}  // namespace

double energy(const Instance& inst, std::span<const Spin> x) {
  check_length(inst, x);
  double h = 0.0;
  for (const Edge& e : inst.edges()) {
    h -= e.coupling() * x[static_cast<std::size_t>(e.i)] * x[static_cast<std::size_t>(e.j)];
  }
  if (inst.has_field()) {
    for (std::size_t v = 0; v < x.size(); ++v) h -= inst.field()[v] * x[v];
  }
  return h;
}

double max_cut_value(const Instance& inst, std::span<const Spin> x) {
  check_length(inst, x);
  double c = 0.0;
  for (const Edge& e : inst.edges()) {
    if (x[static_cast<std::size_t>(e.i)] != x[static_cast<std::size_t>(e.j)]) c += e.weight;
  }
  return c;
}

double misfit(const Instance& inst, double e) {
  double ideal = inst.total_abs_coupling();
  for (double h : inst.field()) ideal += std::abs(h);
  if (ideal <= 0.0) throw DegenerateInstance("misfit: instance has no couplings");
  return (e + ideal) / (2.0 * ideal);
}

double magnetization(std::span<const Spin> x) {
  if (x.empty()) return 0.0;
  long long s = 0;
  for (Spin v : x) s += v;
  return static_cast<double>(s) / static_cast<double>(x.size());
}

SpinConfig make_config(const Instance& inst, std::vector<Spin> x) {
  const double e = energy(inst, x);
  return {std::move(x), e};
}

SpinConfig random_config(const Instance& inst, Rng& rng) {
  std::vector<Spin> x(static_cast<std::size_t>(inst.n()));
  for (auto& s : x) s = (rng() >> 63) != 0U ? Spin{1} : Spin{-1};
  return make_config(inst, std::move(x));
}

std::vector<int> bfs_distances(const Instance& inst, Vertex source) {
  std::vector<int> dist(static_cast<std::size_t>(inst.n()), -1);
  std::queue<Vertex> q;
  dist[static_cast<std::size_t>(source)] = 0;
  q.push(source);
  while (!q.empty()) {
    const Vertex u = q.front();
    q.pop();
    for (const Incidence& inc : inst.adjacency(u)) {
      auto& dv = dist[static_cast<std::size_t>(inc.neighbor)];
      if (dv < 0) {
        dv = dist[static_cast<std::size_t>(u)] + 1;
        q.push(inc.neighbor);
      }
    }
  }
  return dist;
}

// ---------------------------------------------------------------------------
// Text format:
//   n m
//   i j w        (m lines)
//   h i value    (optional field lines)
// '#' starts a comment line. Weights are written in shortest round-trip form.

Instance read_instance(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string(), 0);

  std::string raw;
  std::size_t line = 0;
  bool have_header = false;
  long long n = 0;
  long long m = 0;
  std::vector<Edge> edges;
  std::vector<double> field;
  std::set<std::pair<Vertex, Vertex>> seen;

  while (std::getline(in, raw)) {
    ++line;
    auto toks = split_ws(raw);
    if (toks.empty() || toks[0].front() == '#') continue;

    if (!have_header) {
      if (toks.size() != 2) throw ParseError("header must be 'n m'", line);
      n = parse_number<long long>(toks[0], line, "vertex count");
      m = parse_number<long long>(toks[1], line, "edge count");
      if (n < 0 || m < 0) throw ParseError("negative count in header", line);
      have_header = true;
      continue;
    }

    if (toks[0] == "h") {
      if (toks.size() != 3) throw ParseError("field line must be 'h i value'", line);
      const auto v = parse_number<long long>(toks[1], line, "vertex id");
      if (v < 0 || v >= n) throw ParseError("field vertex out of range", line);
      if (field.empty()) field.assign(static_cast<std::size_t>(n), 0.0);
      field[static_cast<std::size_t>(v)] = parse_number<double>(toks[2], line, "field value");
      continue;
    }

    if (toks.size() != 3) throw ParseError("edge line must be 'i j w'", line);
    if (static_cast<long long>(edges.size()) >= m) {
      throw ParseError("more edge lines than declared m=" + std::to_string(m), line);
    }
    auto i = parse_number<long long>(toks[0], line, "vertex id");
    auto j = parse_number<long long>(toks[1], line, "vertex id");
    const auto w = parse_number<double>(toks[2], line, "weight");
    if (i < 0 || j < 0 || i >= n || j >= n) throw ParseError("vertex id out of range", line);
    if (i == j) throw ParseError("self-loop at vertex " + std::to_string(i), line);
    if (!std::isfinite(w)) throw ParseError("non-finite weight", line);
    if (i > j) std::swap(i, j);
    if (!seen.emplace(static_cast<Vertex>(i), static_cast<Vertex>(j)).second) {
      throw ParseError("duplicate edge " + std::to_string(i) + " " + std::to_string(j), line);
    }
    edges.push_back({static_cast<Vertex>(i), static_cast<Vertex>(j), w});
  }
  if (!have_header) throw ParseError("missing 'n m' header", line);
  if (static_cast<long long>(edges.size()) != m) {
    throw ParseError("declared " + std::to_string(m) + " edges but found " +
                         std::to_string(edges.size()),
                     line);
  }
  return Instance(static_cast<int>(n), std::move(edges), std::move(field));
}

void write_instance(const Instance& inst, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << inst.n() << ' ' << inst.num_edges() << '\n';
  for (const Edge& e : inst.edges()) {
    out << e.i << ' ' << e.j << ' ' << format_double(e.weight) << '\n';
  }
  for (std::size_t v = 0; v < inst.field().size(); ++v) {
    if (inst.field()[v] != 0.0) out << "h " << v << ' ' << format_double(inst.field()[v]) << '\n';
  }
  if (!out) throw Error("write failed for " + path.string());
}

}  // namespace cgca
