#include <cmath>
#include <numeric>

#include "cgca/classical.hpp"
#include "cgca/error.hpp"
#include "cgca/exact.hpp"
#include "helpers.hpp"

using namespace cgca;

namespace {

double max_abs_diff(const CorrelationMatrix& a, const CorrelationMatrix& b) {
  double d = 0.0;
  for (int i = 0; i < a.n(); ++i)
    for (int j = 0; j < a.n(); ++j) d = std::max(d, std::abs(a(i, j) - b(i, j)));
  return d;
}

SampleSet enumerate_boltzmann(const Instance& g, double beta) {
  SampleSet s;
  s.n = g.n();
  s.beta_s = beta;
  std::vector<double> energies;
  for (std::uint32_t mask = 0; mask < (1U << g.n()); ++mask) {
    std::vector<Spin> x(static_cast<std::size_t>(g.n()));
    for (int i = 0; i < g.n(); ++i) x[static_cast<std::size_t>(i)] = (mask >> i & 1U) ? -1 : 1;
    s.bitstrings.push_back(make_config(g, x));
    energies.push_back(s.bitstrings.back().energy);
  }
  const double e0 = *std::min_element(energies.begin(), energies.end());
  for (double e : energies) s.weights.push_back(std::exp(-beta * (e - e0)));
  return s;
}

}  // namespace

TEST_CASE("coupling-constant correlations") {
  const auto z = cc_correlations(testing::single_edge());
  CHECK(z(0, 1) == -1.0);
  CHECK(z.source() == CorrelationSource::CC);
  const Instance g = generate_regular(12, 3, 8);
  const auto zg = cc_correlations(g);
  CHECK(zg.mean_abs_nonzero() == 1.0);
  CHECK(zg.recompute_mean_abs_nonzero() == zg.mean_abs_nonzero());
  for (const Edge& e : g.edges()) CHECK(zg(e.i, e.j) == e.coupling());
  CHECK(zg(0, 0) == 1.0);
}

TEST_CASE("correlation matrix validation") {
  CHECK_THROWS_AS(CorrelationMatrix(2, {1.0, 0.5, 0.4, 1.0}, CorrelationSource::MC), InvalidParameter);
  CHECK_THROWS_AS(CorrelationMatrix(2, {1.0, 1.5, 1.5, 1.0}, CorrelationSource::MC), InvalidParameter);
  const CorrelationMatrix clipped(2, {1.0, 1.0 + 1e-12, 1.0 + 1e-12, 1.0}, CorrelationSource::SDP);
  CHECK(clipped(0, 1) == 1.0);
}

TEST_CASE("random cluster policy range") {
  CHECK_NOTHROW(random_cluster_policy(0.0));
  CHECK_NOTHROW(random_cluster_policy(1.0));
  CHECK_THROWS_AS(random_cluster_policy(-0.1), InvalidParameter);
  CHECK_THROWS_AS(random_cluster_policy(1.1), InvalidParameter);
}

TEST_CASE("Metropolis sampler") {
  const Instance g = generate_regular(10, 3, 21);
  SUBCASE("beta 0 is uniform") {
    MetropolisOptions o;
    o.burn_in = 10;
    o.thin = 1;
    o.n_samples = 20000;
    const SampleSet s = mh_sample(g, 0.0, o, 3);
    CHECK(s.acceptance_rate == 1.0);
    for (int i = 0; i < g.n(); ++i) {
      double m = 0.0;
      for (const auto& c : s.bitstrings) m += c.x[static_cast<std::size_t>(i)];
      CHECK(std::abs(m / 20000.0) < 4.0 / std::sqrt(20000.0));
    }
  }
  SUBCASE("deterministic and cached energies") {
    MetropolisOptions o;
    o.n_samples = 50;
    const SampleSet a = mh_sample(g, 0.8, o, 9);
    const SampleSet b = mh_sample(g, 0.8, o, 9);
    REQUIRE(a.bitstrings.size() == 50);
    for (std::size_t k = 0; k < 50; ++k) {
      CHECK(a.bitstrings[k].x == b.bitstrings[k].x);
      CHECK(a.bitstrings[k].energy == energy(g, a.bitstrings[k].x));
    }
  }
  SUBCASE("matches exact correlations") {
    const Instance h = generate_regular(8, 3, 5);
    MetropolisOptions o;
    o.n_samples = 50000;
    o.thin = 2;
    const SampleSet s = mh_sample(h, 0.5, o, 11);
    CHECK(max_abs_diff(mc_correlations(s), exact_boltzmann_correlations(h, 0.5)) < 0.03);
  }
  SUBCASE("parameter errors") {
    MetropolisOptions o;
    CHECK_THROWS_AS(mh_sample(g, -1.0, o, 1), InvalidParameter);
    o.n_samples = 0;
    CHECK_THROWS_AS(mh_sample(g, 1.0, o, 1), InvalidParameter);
  }
}

TEST_CASE("sample correlations") {
  const Instance g = generate_regular(6, 3, 2);
  SUBCASE("single all-up sample") {
    SampleSet s;
    s.n = 6;
    s.bitstrings.push_back(make_config(g, std::vector<Spin>(6, 1)));
    const auto z = mc_correlations(s);
    for (int i = 0; i < 6; ++i)
      for (int j = 0; j < 6; ++j) CHECK(z(i, j) == 1.0);
  }
  SUBCASE("closure under global flip") {
    Rng rng(1);
    SampleSet s;
    s.n = 6;
    for (int k = 0; k < 30; ++k) s.bitstrings.push_back(make_config(g, testing::random_spins(6, rng)));
    SampleSet both = s;
    for (const auto& c : s.bitstrings) {
      std::vector<Spin> y(c.x);
      for (auto& v : y) v = static_cast<Spin>(-v);
      both.bitstrings.push_back(make_config(g, y));
    }
    CHECK(max_abs_diff(mc_correlations(s), mc_correlations(both)) < 1e-15);
  }
  SUBCASE("empty set") {
    SampleSet s;
    s.n = 6;
    CHECK_THROWS_AS(mc_correlations(s), InvalidParameter);
  }
  SUBCASE("weighted enumeration equals exact Boltzmann") {
    const Instance h = generate_regular(10, 3, 13);
    for (double beta : {0.3, 1.0}) {
      CHECK(max_abs_diff(mc_correlations(enumerate_boltzmann(h, beta)),
                         exact_boltzmann_correlations(h, beta)) < 1e-12);
    }
  }
}

TEST_CASE("SDP relaxation") {
  SUBCASE("single edge is antipodal") {
    SdpSolution sol = sdp_solve(testing::single_edge());
    CHECK(sol.objective == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(sdp_correlations(sol)(0, 1) == doctest::Approx(-1.0).epsilon(1e-9));
    const RoundingResult r = gw_round(testing::single_edge(), sol, 200, 4);
    CHECK(r.mean_cut == 1.0);
    CHECK(r.best_cut == 1.0);
  }
  SUBCASE("triangle") {
    SdpOptions tight;
    tight.tol = 1e-15;
    const SdpSolution sol = sdp_solve(testing::triangle(), tight);
    CHECK(sol.objective == doctest::Approx(9.0 / 4.0).epsilon(1e-9));
    const auto z = sdp_correlations(sol);
    CHECK(z(0, 1) == doctest::Approx(-0.5).epsilon(1e-6));
    CHECK(z(1, 2) == doctest::Approx(-0.5).epsilon(1e-6));
  }
  SUBCASE("rank and unit vectors, monotone objective") {
    const Instance g = generate_regular(20, 4, 6);
    const SdpSolution sol = sdp_solve(g);
    CHECK(sol.rank == default_sdp_rank(20));
    CHECK(default_sdp_rank(20) == 8);
    for (Vertex i = 0; i < 20; ++i) {
      const auto v = sol.vector(i);
      CHECK(std::sqrt(std::inner_product(v.begin(), v.end(), v.begin(), 0.0)) ==
            doctest::Approx(1.0).epsilon(1e-9));
    }
    for (std::size_t k = 1; k < sol.history.size(); ++k) CHECK(sol.history[k] >= sol.history[k - 1] - 1e-12);
  }
  SUBCASE("upper-bounds the maximum cut") {
    for (std::uint64_t seed = 1; seed <= 6; ++seed) {
      const Instance g = generate_regular(14, seed % 2 ? 3 : 6, seed);
      const ExactResult ex = brute_force(g);
      const double max_cut = (g.total_weight() - ex.e_min) / 2.0;
      CHECK(sdp_solve(g).objective >= max_cut - 1e-6);
    }
  }
  SUBCASE("correlations are rotation invariant") {
    const Instance g = generate_regular(10, 3, 3);
    SdpSolution sol = sdp_solve(g);
    const auto z = sdp_correlations(sol);
    // Random orthogonal map from Gram-Schmidt on a Gaussian matrix.
    const int r = sol.rank;
    Rng rng(8);
    std::normal_distribution<double> normal;
    std::vector<std::vector<double>> q(static_cast<std::size_t>(r), std::vector<double>(static_cast<std::size_t>(r)));
    for (auto& row : q)
      for (auto& v : row) v = normal(rng);
    for (std::size_t a = 0; a < q.size(); ++a) {
      for (std::size_t b = 0; b < a; ++b) {
        const double d = std::inner_product(q[a].begin(), q[a].end(), q[b].begin(), 0.0);
        for (std::size_t c = 0; c < q[a].size(); ++c) q[a][c] -= d * q[b][c];
      }
      const double nrm = std::sqrt(std::inner_product(q[a].begin(), q[a].end(), q[a].begin(), 0.0));
      for (auto& v : q[a]) v /= nrm;
    }
    SdpSolution rot = sol;
    for (Vertex i = 0; i < sol.n; ++i) {
      const auto v = sol.vector(i);
      for (int a = 0; a < r; ++a) {
        rot.vectors[static_cast<std::size_t>(i * r + a)] =
            std::inner_product(v.begin(), v.end(), q[static_cast<std::size_t>(a)].begin(), 0.0);
      }
    }
    CHECK(max_abs_diff(z, sdp_correlations(rot)) < 1e-9);
  }
  SUBCASE("rounding ratio on a nonnegative graph") {
    const Instance base = generate_regular(30, 3, 2);
    std::vector<Edge> es;
    for (const Edge& e : base.edges()) es.push_back({e.i, e.j, 1.0});
    const Instance g(30, es);
    SdpSolution sol = sdp_solve(g);
    const RoundingResult r = gw_round(g, sol, 1000, 5);
    const double slack = 3.0 * r.stddev_cut / std::sqrt(1000.0) / sol.objective;
    CHECK(r.ratio >= 0.878 - slack);
    CHECK(sol.rounding_ratio == r.ratio);
    CHECK(r.best.energy == energy(g, r.best.x));
  }
  SUBCASE("errors") {
    SdpOptions o;
    o.rank = 1;
    CHECK_THROWS_AS(sdp_solve(testing::triangle(), o), InvalidParameter);
    SdpSolution sol = sdp_solve(testing::triangle());
    CHECK_THROWS_AS(gw_round(testing::triangle(), sol, 0, 1), InvalidParameter);
  }
}

TEST_CASE("correlation and sample files") {
  testing::TempDir dir("corr");
  const Instance g = generate_regular(8, 3, 4);
  MetropolisOptions o;
  o.n_samples = 40;
  const SampleSet s = mh_sample(g, 1.0, o, 2);
  const auto z = mc_correlations(s);
  write_correlations(z, dir / "z.txt");
  const auto back = read_correlations(dir / "z.txt");
  CHECK(back.n() == 8);
  CHECK(back.source() == CorrelationSource::MC);
  CHECK(back.param() == 1.0);
  CHECK(back.values() == z.values());

  write_samples(s, dir / "s.txt");
  const SampleSet sb = read_samples(g, dir / "s.txt");
  REQUIRE(sb.bitstrings.size() == s.bitstrings.size());
  for (std::size_t k = 0; k < s.bitstrings.size(); ++k) CHECK(sb.bitstrings[k].x == s.bitstrings[k].x);
}
