#include <cmath>
#include <numeric>

#include "cgca/anneal.hpp"
#include "cgca/classical.hpp"
#include "cgca/error.hpp"
#include "cgca/exact.hpp"
#include "helpers.hpp"

using namespace cgca;

namespace {

RunOptions all_events() {
  RunOptions o;
  o.window_lo = 0.0;
  o.window_hi = 1e300;
  o.verify_energy = true;
  return o;
}

double overall_acceptance(const std::vector<RunRecord>& recs) {
  double acc = 0.0;
  double total = 0.0;
  for (const auto& r : recs) {
    acc += static_cast<double>(r.accepted);
    total += static_cast<double>(r.evaluations);
  }
  return acc / total;
}

}  // namespace

TEST_CASE("delta energy") {
  const Instance g = generate_regular(14, 4, 3);
  Rng rng(7);
  SUBCASE("global flip and empty set") {
    const auto x = testing::random_spins(14, rng);
    std::vector<Vertex> all(14);
    std::iota(all.begin(), all.end(), 0);
    CHECK(delta_energy(g, x, all) == 0.0);
    CHECK(delta_energy(g, x, {}) == 0.0);
  }
  SUBCASE("matches recomputation with duplicates ignored") {
    for (int t = 0; t < 2000; ++t) {
      auto x = testing::random_spins(14, rng);
      std::vector<Vertex> members;
      const auto k = 1 + uniform_index(rng, 14);
      for (std::uint64_t i = 0; i < k; ++i) members.push_back(static_cast<Vertex>(uniform_index(rng, 14)));
      const double before = energy(g, x);
      const double de = delta_energy(g, x, members);
      std::vector<char> done(14, 0);
      for (Vertex v : members) {
        if (!done[static_cast<std::size_t>(v)]) {
          done[static_cast<std::size_t>(v)] = 1;
          x[static_cast<std::size_t>(v)] = static_cast<Spin>(-x[static_cast<std::size_t>(v)]);
        }
      }
      REQUIRE(de == energy(g, x) - before);
      REQUIRE(std::fmod(de, 2.0) == 0.0);
    }
  }
  SUBCASE("field contributes") {
    const Instance h(3, {{0, 1, 1.0}, {1, 2, -1.0}}, {0.5, -1.5, 0.25});
    std::vector<Spin> x{1, -1, 1};
    const double before = energy(h, x);
    const double de = delta_energy(h, x, std::vector<Vertex>{1});
    x[1] = 1;
    CHECK(de == doctest::Approx(energy(h, x) - before));
  }
  SUBCASE("out of range member") {
    const auto x = testing::random_spins(14, rng);
    CHECK_THROWS_AS(delta_energy(g, x, std::vector<Vertex>{14}), InvalidParameter);
  }
}

TEST_CASE("cluster annealing schedule") {
  Rng rng(11);
  for (int t = 0; t < 200; ++t) {
    const int n = 6 + static_cast<int>(uniform_index(rng, 20));
    const int d = (n % 2 == 0) ? 3 : 4;
    const Instance g = generate_regular(n, d, rng());
    const auto z = cc_correlations(g);
    const std::uint64_t m = 2 + uniform_index(rng, 40ULL * static_cast<std::uint64_t>(n));
    const double scale = 0.2 + 3.0 * uniform01(rng);
    const RunRecord r = run_ca(g, &z, 8.0, m, scale, ClusterPolicy::correlation_guided(), rng(), all_events());
    REQUIRE(r.schedule.consumed <= m - 1);
    REQUIRE(r.schedule.beta >= 8.0);
    CHECK(r.schedule.beta == 8.0 * static_cast<double>(r.schedule.consumed) / static_cast<double>(m - 1));
    CHECK(r.evaluations <= m - 1);
    CHECK(r.flipped_spins >= r.schedule.consumed);
    CHECK(r.e_best == energy(g, r.x_best.x));
    CHECK(r.e_best <= r.e_final);
    REQUIRE(r.events.size() == r.evaluations);
    double consumed = 0.0;
    for (const auto& ev : r.events) {
      CHECK(ev.beta == doctest::Approx(8.0 * std::min(consumed, double(m - 1)) / double(m - 1)));
      CHECK(std::fmod(ev.delta_e, 2.0) == 0.0);
      consumed += ev.cluster_size;
    }
  }
}

TEST_CASE("schedule terminates for any final beta") {
  // 0.7 * 3 / 3 and 0.1 * 43 / 43 round below their starting value.
  const Instance g = generate_regular(12, 2, 3);
  const auto z = cc_correlations(g);
  for (double beta_f : {0.7, 0.1, 1.3, 2.9}) {
    for (std::uint64_t m : {4ULL, 14ULL, 44ULL, 110ULL, 1001ULL}) {
      const RunRecord r = run_ca(g, &z, beta_f, m, 1.0, random_cluster_policy(0.5), m);
      CHECK(r.schedule.beta == beta_f);
      CHECK(r.schedule.consumed == m - 1);
    }
  }
}

TEST_CASE("annealing argument checks") {
  const Instance g = generate_regular(8, 3, 1);
  const auto z = cc_correlations(g);
  CHECK_THROWS_AS(run_sa(g, 8.0, 1, 1), InvalidParameter);
  CHECK_THROWS_AS(run_sa(g, 0.0, 10, 1), InvalidParameter);
  CHECK_THROWS_AS(run_ca(g, &z, 8.0, 1, 1.0, ClusterPolicy::correlation_guided(), 1), InvalidParameter);
  CHECK_THROWS_AS(run_ca(g, &z, -1.0, 10, 1.0, ClusterPolicy::correlation_guided(), 1), InvalidParameter);
}

TEST_CASE("simulated annealing") {
  const Instance g = generate_regular(12, 3, 2);
  SUBCASE("two-point schedule ends at beta_f") {
    const RunRecord r = run_sa(g, 8.0, 2, 5, all_events());
    REQUIRE(r.events.size() == 2);
    CHECK(r.events[0].beta == 0.0);
    CHECK(r.events[1].beta == 8.0);
    CHECK(r.evaluations == 2);
  }
  SUBCASE("best energy is consistent and deterministic") {
    const RunRecord a = run_sa(g, 8.0, 500, 9, all_events());
    const RunRecord b = run_sa(g, 8.0, 500, 9, all_events());
    CHECK(a.e_best == b.e_best);
    CHECK(a.x_best.x == b.x_best.x);
    CHECK(a.e_best == energy(g, a.x_best.x));
    CHECK(a.events.size() == 500);
    CHECK(a.schedule.beta == 8.0);
  }
}

TEST_CASE("zero-scale cluster annealing behaves like single-spin annealing") {
  const Instance g = generate_regular(16, 3, 6);
  const auto z = cc_correlations(g);
  std::vector<RunRecord> ca;
  std::vector<RunRecord> sa;
  for (std::uint64_t s = 0; s < 300; ++s) {
    ca.push_back(run_ca(g, &z, 8.0, 400, 0.0, ClusterPolicy::correlation_guided(), derive_seed(1, {s})));
    sa.push_back(run_sa(g, 8.0, 400, derive_seed(2, {s})));
  }
  for (const auto& r : ca) CHECK(r.flipped_spins == r.evaluations);
  CHECK(overall_acceptance(ca) == doctest::Approx(overall_acceptance(sa)).epsilon(0.03));
  const auto sca = acceptance_statistics(ca, 1.0, 8.0);
  const auto ssa = acceptance_statistics(sa, 1.0, 8.0);
  CHECK(std::abs(sca.median - ssa.median) < 0.02);
}

TEST_CASE("cluster annealing finds the optimum") {
  const Instance g = generate_regular(12, 3, 21);
  const double e_min = brute_force(g).e_min;
  const auto z = cc_correlations(g);
  int hits = 0;
  for (std::uint64_t rep = 0; rep < 100; ++rep) {
    const RunRecord r = run_ca(g, &z, 8.0, 1200, 1.0, ClusterPolicy::correlation_guided(), derive_seed(4, {rep}));
    CHECK(r.e_best >= e_min);
    if (r.e_best == e_min) ++hits;
  }
  CHECK(hits > 0);
}

TEST_CASE("random-cluster annealing") {
  const Instance g = generate_regular(12, 3, 3);
  const RunRecord r = run_ca(g, nullptr, 8.0, 1200, 0.0, random_cluster_policy(0.2), 5, all_events());
  CHECK(r.schedule.consumed <= 1199);
  CHECK(r.e_best == energy(g, r.x_best.x));
}

TEST_CASE("acceptance statistics") {
  RunRecord all;
  all.events = {{1.5, 2, 4.0, true}, {3.0, 1, 2.0, true}};
  RunRecord half;
  half.events = {{1.5, 2, 4.0, true}, {3.0, 1, 2.0, false}, {9.0, 1, 2.0, false}};
  RunRecord outside;
  outside.events = {{0.5, 2, 4.0, false}};
  const std::vector<RunRecord> one{all};
  CHECK(acceptance_statistics(one, 1.0, 8.0).median == 1.0);
  const std::vector<RunRecord> recs{all, half, outside};
  const auto s = acceptance_statistics(recs, 1.0, 8.0);
  CHECK(s.rates.size() == 2);
  CHECK(s.median == 0.75);
  CHECK(s.min == 0.5);
  CHECK(s.max == 1.0);
  CHECK_THROWS_AS(acceptance_statistics(std::vector<RunRecord>{}, 1.0, 8.0), InvalidParameter);
  CHECK_THROWS_AS(acceptance_statistics(std::vector<RunRecord>{outside}, 1.0, 8.0), InvalidParameter);
  CHECK_THROWS_AS(acceptance_statistics(recs, 8.0, 1.0), InvalidParameter);
  const std::vector<double> q{1.0, 2.0, 3.0, 4.0};
  CHECK(sorted_quantile(q, 0.25) == 1.75);
}
