#include <cmath>

#include "cgca/classical.hpp"
#include "cgca/cluster.hpp"
#include "cgca/error.hpp"
#include "helpers.hpp"

using namespace cgca;
using Orientation = ClusterPolicy::Orientation;

namespace {

CorrelationMatrix constant_offdiag(int n, double v) {
  std::vector<double> vals(static_cast<std::size_t>(n * n), v);
  for (int i = 0; i < n; ++i) vals[static_cast<std::size_t>(i * n + i)] = 1.0;
  return {n, vals, CorrelationSource::MC, 1.0};
}

std::vector<Vertex> component_of(const Instance& g, Vertex s) {
  std::vector<char> seen(static_cast<std::size_t>(g.n()), 0);
  std::vector<Vertex> out{s};
  seen[static_cast<std::size_t>(s)] = 1;
  for (std::size_t k = 0; k < out.size(); ++k) {
    for (const Incidence& inc : g.adjacency(out[k])) {
      if (!seen[static_cast<std::size_t>(inc.neighbor)]) {
        seen[static_cast<std::size_t>(inc.neighbor)] = 1;
        out.push_back(inc.neighbor);
      }
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

TEST_CASE("percolation threshold") {
  SUBCASE("3-regular with unit correlations") {
    const Instance g = generate_regular(16, 3, 1);
    const auto est = percolation_lambda(g, cc_correlations(g));
    CHECK(est.lambda_perc == 0.25);
    CHECK(est.d1 == 3.0);
    CHECK(est.d2 == 9.0);
    CHECK(est.lambda_perc == est.d1 / (2.0 * est.mean_abs_z * (est.d2 - est.d1)));
  }
  SUBCASE("20-regular with half-size correlations") {
    const Instance g = generate_regular(24, 20, 2);
    CHECK(percolation_lambda(g, constant_offdiag(24, -0.5)).lambda_perc == doctest::Approx(1.0 / 19.0));
  }
  SUBCASE("degenerate inputs") {
    const Instance matching(4, {{0, 1, 1.0}, {2, 3, -1.0}});
    CHECK_THROWS_AS(percolation_lambda(matching, cc_correlations(matching)), DegenerateTopology);
    const Instance g = generate_regular(8, 3, 1);
    CHECK_THROWS_AS(percolation_lambda(g, constant_offdiag(8, 0.0)), DegenerateCorrelation);
  }
}

TEST_CASE("link probability") {
  CHECK(link_probability(-0.3, 1.0, 0.25) == 0.0);
  CHECK(link_probability(0.25, 1.0, 0.25) == 1.0);
  CHECK(link_probability(2.0, 1.0, 0.25) == 1.0);
  // x_i = x_j = +1, Z_ij = -0.1: score 0.1.
  CHECK(link_probability(-(1 * 1) * -0.1, 1.0, 0.25) == doctest::Approx(0.4));
  double prev = 0.0;
  for (double s : {0.0, 0.5, 1.0, 2.0, 4.0}) {
    const double p = link_probability(0.05, s, 0.25);
    CHECK(p >= prev);
    prev = p;
  }
}

TEST_CASE("singleton boundary score") {
  const Instance g(3, {{0, 1, 1.0}, {1, 2, 1.0}});
  const CorrelationMatrix z(3, {1.0, -0.1, 0.0, -0.1, 1.0, -0.1, 0.0, -0.1, 1.0}, CorrelationSource::MC, 1.0);
  const std::vector<Spin> x{1, 1, 1};
  SUBCASE("current orientation is the literal pair score") {
    const auto ctx = ClusterContext::make(g, &z, 1.0, ClusterPolicy::correlation_guided(Orientation::Current));
    ClusterBuilder b(ctx);
    b.start(x, 0);
    const auto bd = b.boundary();
    REQUIRE(bd.size() == 1);
    CHECK(bd[0].score == doctest::Approx(0.1));
  }
  SUBCASE("flipped orientation reverses the sign") {
    const auto ctx = ClusterContext::make(g, &z, 1.0, ClusterPolicy::correlation_guided());
    ClusterBuilder b(ctx);
    b.start(x, 0);
    const auto bd = b.boundary();
    REQUIRE(bd.size() == 1);
    CHECK(bd[0].score == doctest::Approx(-0.1));
    CHECK(bd[0].coupling_sum == -1.0);
  }
}

TEST_CASE("two-vertex inclusion frequency") {
  // A path 0-1-2 keeps the degree moments non-degenerate; vertex 2 is never
  // reached when growth from 0 stops at 1's rejection.
  const Instance g(3, {{0, 1, 1.0}, {1, 2, 1.0}});
  // d1 = 4/3, d2 = 2, mean|Z| = 0.3 -> lambda_perc = (4/3) / (2 * 0.3 * 2/3) = 10/3.
  const CorrelationMatrix z(3, {1.0, -0.3, 0.0, -0.3, 1.0, -0.3, 0.0, -0.3, 1.0}, CorrelationSource::MC, 1.0);
  const std::vector<Spin> x{1, 1, 1};
  const auto ctx = ClusterContext::make(g, &z, 2.0, ClusterPolicy::correlation_guided(Orientation::Current));
  CHECK(ctx.lambda_perc == doctest::Approx(10.0 / 3.0));
  const double p = link_probability(0.3, 2.0, ctx.lambda_perc);
  CHECK(p == doctest::Approx(0.18));
  Rng rng(42);
  const int trials = 100000;
  int hits = 0;
  for (int t = 0; t < trials; ++t) {
    const Cluster c = create_cluster(ctx, x, 0, rng);
    if (std::find(c.members.begin(), c.members.end(), 1) != c.members.end()) ++hits;
  }
  const double sigma = std::sqrt(p * (1.0 - p) / trials);
  CHECK(std::abs(static_cast<double>(hits) / trials - p) < 3.0 * sigma);
}

TEST_CASE("degenerate growth") {
  const Instance g = generate_regular(12, 3, 5);
  const auto z = cc_correlations(g);
  Rng rng(1);
  SUBCASE("zero scale gives singletons") {
    const auto ctx = ClusterContext::make(g, &z, 0.0, ClusterPolicy::correlation_guided());
    for (int t = 0; t < 50; ++t) {
      const auto x = testing::random_spins(12, rng);
      const Cluster c = create_cluster(ctx, x, t % 12, rng);
      CHECK(c.members == std::vector<Vertex>{t % 12});
    }
  }
  SUBCASE("non-positive scores give singletons") {
    // Under the literal reading every satisfied bond has score <= 0.
    const Instance ferro(4, {{0, 1, -1.0}, {1, 2, -1.0}, {2, 3, -1.0}, {0, 2, -1.0}});
    const auto zf = cc_correlations(ferro);
    const auto ctx = ClusterContext::make(ferro, &zf, 1.0, ClusterPolicy::correlation_guided(Orientation::Current));
    const std::vector<Spin> up(4, 1);
    for (int t = 0; t < 20; ++t) CHECK(create_cluster(ctx, up, t % 4, rng).members.size() == 1);
  }
  SUBCASE("constant policy extremes") {
    const auto ctx0 = ClusterContext::make(g, nullptr, 1.0, random_cluster_policy(0.0));
    const auto ctx1 = ClusterContext::make(g, nullptr, 1.0, random_cluster_policy(1.0));
    const Instance two(5, {{0, 1, 1.0}, {1, 2, -1.0}, {3, 4, 1.0}});
    const auto ctx1b = ClusterContext::make(two, nullptr, 1.0, random_cluster_policy(1.0));
    for (int t = 0; t < 20; ++t) {
      const auto x = testing::random_spins(12, rng);
      CHECK(create_cluster(ctx0, x, t % 12, rng).members.size() == 1);
      CHECK(create_cluster(ctx1, x, t % 12, rng).members.size() == 12);
      const auto y = testing::random_spins(5, rng);
      auto m = create_cluster(ctx1b, y, t % 5, rng).members;
      std::sort(m.begin(), m.end());
      CHECK(m == component_of(two, t % 5));
    }
  }
}

TEST_CASE("incremental boundary stays consistent") {
  Rng rng(3);
  for (int t = 0; t < 40; ++t) {
    const Instance g = generate_regular(14, 2 + static_cast<int>(t % 4) * 2, rng());
    const std::vector<double> scales{0.3, 1.0, 3.0};
    for (double s : scales) {
      for (Orientation o : {Orientation::Flipped, Orientation::Current}) {
        const auto z = cc_correlations(g);
        const auto ctx = ClusterContext::make(g, &z, s, ClusterPolicy::correlation_guided(o));
        ClusterBuilder b(ctx);
        const auto x = testing::random_spins(14, rng);
        const auto seed = static_cast<Vertex>(uniform_index(rng, 14));
        b.start(x, seed);
        REQUIRE(b.consistent());
        while (b.step(rng)) REQUIRE(b.consistent());
        const auto members = b.members();
        CHECK(members.front() == seed);
        CHECK(members.size() <= 14);
        for (const auto& e : b.boundary()) CHECK_FALSE(b.contains(e.vertex));
      }
    }
  }
}

TEST_CASE("cluster growth is deterministic") {
  const Instance g = generate_regular(30, 3, 8);
  const auto z = cc_correlations(g);
  const auto ctx = ClusterContext::make(g, &z, 1.0, ClusterPolicy::correlation_guided());
  Rng r0(5);
  const auto x = testing::random_spins(30, r0);
  Rng a(99);
  Rng b(99);
  for (int t = 0; t < 20; ++t) {
    const Cluster ca = create_cluster(ctx, x, t, a);
    const Cluster cb = create_cluster(ctx, x, t, b);
    CHECK(ca.members == cb.members);
    CHECK(ca.removed_edges == cb.removed_edges);
  }
}

TEST_CASE("first decision is monotone in the scale") {
  const Instance g = generate_regular(20, 3, 4);
  Rng r0(1);
  std::vector<double> vals(400);
  for (int i = 0; i < 20; ++i)
    for (int j = 0; j < 20; ++j)
      vals[static_cast<std::size_t>(i * 20 + j)] = i == j ? 1.0 : (((i + j) % 3) - 1) * 0.3;
  const CorrelationMatrix z(20, vals, CorrelationSource::MC, 1.0);
  const auto lo = ClusterContext::make(g, &z, 0.5, ClusterPolicy::correlation_guided());
  const auto hi = ClusterContext::make(g, &z, 2.0, ClusterPolicy::correlation_guided());
  for (std::uint64_t s = 0; s < 500; ++s) {
    const auto x = testing::random_spins(20, r0);
    ClusterBuilder bl(lo);
    ClusterBuilder bh(hi);
    bl.start(x, 0);
    bh.start(x, 0);
    Rng ra(s);
    Rng rb(s);
    bl.step(ra);
    bh.step(rb);
    CHECK(bh.members().size() >= bl.members().size());
  }
}

TEST_CASE("coupling-constant clusters stay below half the graph") {
  double total = 0.0;
  int count = 0;
  Rng rng(10);
  for (int gi = 0; gi < 20; ++gi) {
    const Instance g = generate_regular(100, 3, derive_seed(7, {static_cast<std::uint64_t>(gi)}));
    const auto z = cc_correlations(g);
    const auto ctx = ClusterContext::make(g, &z, 1.0, ClusterPolicy::correlation_guided());
    for (int t = 0; t < 50; ++t) {
      const auto x = testing::random_spins(100, rng);
      total += static_cast<double>(
          create_cluster(ctx, x, static_cast<Vertex>(uniform_index(rng, 100)), rng).members.size());
      ++count;
    }
  }
  CHECK(total / count < 50.0);
}

TEST_CASE("context validation") {
  const Instance g = generate_regular(8, 3, 1);
  CHECK_THROWS_AS(ClusterContext::make(g, nullptr, 1.0, ClusterPolicy::correlation_guided()), InvalidParameter);
  const auto z = cc_correlations(generate_regular(10, 3, 1));
  CHECK_THROWS_AS(ClusterContext::make(g, &z, 1.0, ClusterPolicy::correlation_guided()), InvalidParameter);
}
