#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include "cgca/bench.hpp"
#include "cgca/classical.hpp"
#include "cgca/error.hpp"
#include "cgca/exact.hpp"
#include "helpers.hpp"

using namespace cgca;

namespace {

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string first_line(const std::filesystem::path& p) {
  std::ifstream in(p);
  std::string line;
  std::getline(in, line);
  return line;
}

ExperimentConfig small_config() {
  ExperimentConfig cfg;
  cfg.n = 10;
  cfg.degree = 3;
  cfg.graphs = 3;
  cfg.reps = 4;
  cfg.budgets = {5.0, 20.0};
  cfg.methods = {Method::SA, Method::CA};
  cfg.sources = {CorrelationSource::CC, CorrelationSource::Random, CorrelationSource::MC};
  cfg.beta_s = {0.5};
  cfg.mc_samples = 200;
  cfg.mc_burn_in = 50;
  cfg.seed = 12;
  return cfg;
}

ResultRow row(const std::string& g, double e, double mult, int rep = 0) {
  ResultRow r;
  r.graph_id = g;
  r.method = "CA";
  r.source = "CC";
  r.param = "0";
  r.lambda_scale = 1.0;
  r.budget_m = static_cast<std::uint64_t>(mult * 10);
  r.budget_mult = mult;
  r.rep = rep;
  r.e_best = e;
  return r;
}

}  // namespace

TEST_CASE("config parsing") {
  SUBCASE("values, lists and comments") {
    const ExperimentConfig cfg = parse_config(
        "# suite\n"
        "n = 12\n"
        "degree = 5   # dense\n"
        "\n"
        "methods = CA\n"
        "sources = CC, MC\n"
        "beta_s = 0.1, 1.1\n"
        "budgets = 10,100\n"
        "orientation = current\n");
    CHECK(cfg.n == 12);
    CHECK(cfg.degree == 5);
    CHECK(cfg.methods == std::vector<Method>{Method::CA});
    CHECK(cfg.sources == std::vector<CorrelationSource>{CorrelationSource::CC, CorrelationSource::MC});
    CHECK(cfg.beta_s == std::vector<double>{0.1, 1.1});
    CHECK(cfg.budgets == std::vector<double>{10.0, 100.0});
    CHECK(cfg.orientation == ClusterPolicy::Orientation::Current);
  }
  SUBCASE("unknown key fails with its line") {
    try {
      parse_config("n = 12\nlamda_scales = 1\n");
      FAIL("expected a config error");
    } catch (const ConfigError& e) {
      const std::string msg = e.what();
      CHECK(msg.find("line 2") != std::string::npos);
      CHECK(msg.find("lamda_scales") != std::string::npos);
    }
    ExperimentConfig cfg;
    CHECK_THROWS_AS(set_config_value(cfg, "no_such_key", "1"), ConfigError);
  }
  SUBCASE("malformed input") {
    CHECK_THROWS_AS(parse_config("n 12\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("n = twelve\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("n = 12\nn = 14\n"), ConfigError);
    CHECK_THROWS_AS(parse_config("methods = XX\n"), ConfigError);
  }
  SUBCASE("text round trip") {
    ExperimentConfig cfg = small_config();
    cfg.lambda_scales = {0.1, 0.25, 1.0 / 3.0};
    const std::string text = config_to_text(cfg);
    CHECK(config_to_text(parse_config(text)) == text);
  }
  SUBCASE("validation") {
    ExperimentConfig cfg;
    cfg.n = 5;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = ExperimentConfig{};
    cfg.random_p = {1.5};
    cfg.sources = {CorrelationSource::Random};
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg = ExperimentConfig{};
    cfg.reps = -1;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    CHECK_NOTHROW(ExperimentConfig{}.validate());
  }
}

TEST_CASE("suite loading") {
  ExperimentConfig cfg = small_config();
  const auto a = load_suite(cfg);
  const auto b = load_suite(cfg);
  REQUIRE(a.size() == 3);
  CHECK(a[0].id == "rrg_n10_d3_g000");
  CHECK(a[2].id == "rrg_n10_d3_g002");
  for (std::size_t k = 0; k < a.size(); ++k) CHECK(a[k].inst == b[k].inst);
  CHECK_FALSE(a[0].inst == a[1].inst);

  testing::TempDir dir("suite");
  write_instance(a[1].inst, dir / "mine.txt");
  cfg.instances = {(dir / "mine.txt").string()};
  const auto files = load_suite(cfg);
  REQUIRE(files.size() == 1);
  CHECK(files[0].id == "mine");
  CHECK(files[0].inst == a[1].inst);
}

TEST_CASE("references") {
  const Instance g = generate_regular(12, 3, 3);
  const double e_min = brute_force(g).e_min;
  const Reference bf = register_reference(g, ReferenceMethod::BruteForce, 1);
  CHECK(bf.certified);
  CHECK(bf.energy == e_min);
  CHECK(bf.method == "brute_force");
  const Reference sa = register_reference(g, ReferenceMethod::LongSA, 1, 1, 5, 200.0);
  CHECK_FALSE(sa.certified);
  CHECK(sa.energy >= e_min);
  CHECK_THROWS_AS(register_reference(generate_regular(32, 3, 1), ReferenceMethod::BruteForce, 1), SizeLimit);

  ReferenceRegistry reg;
  reg.set("a", bf);
  reg.set("b", Reference{-10.0, false, "long_sa"});
  CHECK_FALSE(reg.offer("b", -8.0));
  CHECK(reg.offer("b", -12.0));
  CHECK(reg.find("b")->energy == -12.0);
  CHECK(reg.find("b")->method == "improved");
  CHECK_FALSE(reg.offer("a", e_min));
  CHECK_THROWS_AS(reg.offer("a", e_min - 2.0), Error);

  testing::TempDir dir("refs");
  reg.write_csv(dir / "refs.csv");
  CHECK(first_line(dir / "refs.csv") == "graph_id,energy,certified,method");
  const ReferenceRegistry back = ReferenceRegistry::read_csv(dir / "refs.csv");
  CHECK(back.find("a")->energy == e_min);
  CHECK(back.find("a")->certified);
  CHECK(back.find("b")->method == "improved");
}

TEST_CASE("optimality flags follow the registry") {
  ReferenceRegistry reg;
  reg.set("g", Reference{-10.0, false, "long_sa"});
  std::vector<ResultRow> rows{row("g", -10.0, 10), row("g", -12.0, 10, 1), row("h", -3.0, 10)};
  rederive_optimal(rows, reg);
  CHECK(rows[0].is_optimal);
  CHECK_FALSE(rows[1].is_optimal);
  CHECK_FALSE(rows[2].is_optimal);
  // A better energy replaces the uncertified reference and invalidates old flags.
  for (const auto& r : rows) reg.offer(r.graph_id, r.e_best);
  rederive_optimal(rows, reg);
  CHECK_FALSE(rows[0].is_optimal);
  CHECK(rows[1].is_optimal);
}

TEST_CASE("results files and summaries") {
  testing::TempDir dir("results");
  std::vector<ResultRow> rows;
  // Graph a: 3 of 4 optimal, graph b: 1 of 4 optimal.
  for (int r = 0; r < 4; ++r) {
    ResultRow x = row("a", -4.0, 10, r);
    x.is_optimal = r < 3;
    x.wall_ms = 0.5 * r;
    x.seed = 100 + static_cast<std::uint64_t>(r);
    rows.push_back(x);
    ResultRow y = row("b", -6.0, 10, r);
    y.is_optimal = r == 0;
    rows.push_back(y);
  }
  write_results_csv(rows, dir / "results.csv");
  CHECK(first_line(dir / "results.csv") == kResultsHeader);
  const auto back = read_results_csv(dir / "results.csv");
  REQUIRE(back.size() == rows.size());
  for (std::size_t k = 0; k < rows.size(); ++k) CHECK(format_row(back[k]) == format_row(rows[k]));

  const auto summary = summarize(rows);
  REQUIRE(summary.size() == 1);
  CHECK(summary[0].graphs == 2);
  CHECK(summary[0].runs == 8);
  CHECK(summary[0].mean_percent_optimal == 50.0);
  CHECK(summary[0].std_percent_optimal == 25.0);
  write_summary_csv(summary, dir / "summary.csv");
  CHECK(first_line(dir / "summary.csv") ==
        "method,source,param,lambda_scale,budget_mult,graphs,runs,mean_percent_optimal,std_percent_optimal");

  AcceptanceRow ev{"a", "QAOA", "3", 2, {1.25, 4, 6.0, false}};
  CHECK(format_row(ev) == "a,QAOA,3,2,1.25,4,6,0");
  write_acceptance_csv(std::vector<AcceptanceRow>{ev}, dir / "acc.csv");
  CHECK(first_line(dir / "acc.csv") == kAcceptanceHeader);
}

TEST_CASE("correlation histograms") {
  const Instance g = generate_regular(12, 4, 5);
  SUBCASE("bin edges") {
    CHECK(histogram_bin(-1.0) == 0);
    CHECK(histogram_bin(0.0) == 20);
    CHECK(histogram_bin(1.0) == Histogram::kBins - 1);
    CHECK(histogram_bin(-0.951) == 0);
    CHECK(histogram_bin(-0.949) == 1);
  }
  SUBCASE("zero correlations form one spike") {
    std::vector<double> vals(144, 0.0);
    for (int i = 0; i < 12; ++i) vals[static_cast<std::size_t>(i * 13)] = 1.0;
    const Histogram h = correlation_histogram(CorrelationMatrix(12, vals, CorrelationSource::MC, 0.1), g,
                                              EdgeFilter::All);
    CHECK(h.total() == g.num_edges());
    CHECK(h.counts[20] == g.num_edges());
    CHECK(h.negative == 0);
  }
  SUBCASE("coupling constants fill the end bins") {
    const Histogram all = correlation_histogram(cc_correlations(g), g, EdgeFilter::All);
    CHECK(all.counts.front() + all.counts.back() == g.num_edges());
    const Histogram ferro = correlation_histogram(cc_correlations(g), g, EdgeFilter::Ferromagnetic);
    CHECK(ferro.counts.front() == 0);
    CHECK(ferro.counts.back() == ferro.total());
  }
  SUBCASE("empty selection") {
    const Instance anti(3, {{0, 1, 1.0}, {1, 2, 1.0}});
    const Histogram h = correlation_histogram(cc_correlations(anti), anti, EdgeFilter::Ferromagnetic);
    CHECK(h.total() == 0);
  }
  SUBCASE("csv") {
    testing::TempDir dir("hist");
    Histogram h = correlation_histogram(cc_correlations(g), g, EdgeFilter::All);
    h.source = "CC";
    h.param = "0";
    write_histogram_csv(std::vector<Histogram>{h}, dir / "h.csv");
    const std::string body = slurp(dir / "h.csv");
    CHECK(body.rfind("source,param,bin_index,bin_lo,bin_hi,count\n", 0) == 0);
    CHECK(std::count(body.begin(), body.end(), '\n') == Histogram::kBins + 1);
  }
  CHECK(parse_edge_filter("ferro") == EdgeFilter::Ferromagnetic);
  CHECK_THROWS_AS(parse_edge_filter("sideways"), Error);
}

TEST_CASE("lambda tuning") {
  ExperimentConfig cfg = small_config();
  const auto graphs = load_suite(cfg);
  std::vector<CorrelationMatrix> zs;
  ReferenceRegistry refs;
  for (const auto& g : graphs) {
    zs.push_back(cc_correlations(g.inst));
    refs.set(g.id, register_reference(g.inst, ReferenceMethod::BruteForce, 1));
  }
  const std::vector<double> one{0.7};
  const TuneResult single = tune_lambda_scale(graphs, zs, refs, one, 10.0, 3, 8.0, 1);
  CHECK(single.best == 0.7);
  const std::vector<double> grid{0.0, 0.5, 1.0, 2.0};
  const TuneResult a = tune_lambda_scale(graphs, zs, refs, grid, 10.0, 5, 8.0, 1, 1);
  const TuneResult b = tune_lambda_scale(graphs, zs, refs, grid, 10.0, 5, 8.0, 1, 4);
  CHECK(a.percent_optimal == b.percent_optimal);
  const auto best = std::max_element(a.percent_optimal.begin(), a.percent_optimal.end());
  CHECK(a.best == grid[static_cast<std::size_t>(best - a.percent_optimal.begin())]);
  ReferenceRegistry missing;
  CHECK_THROWS_AS(tune_lambda_scale(graphs, zs, missing, grid, 10.0, 2, 8.0, 1), ConfigError);
}

TEST_CASE("suite runs") {
  SUBCASE("zero repetitions give an empty table") {
    ExperimentConfig cfg = small_config();
    cfg.reps = 0;
    const SuiteResult r = run_suite(cfg);
    CHECK(r.rows.empty());
    CHECK(r.failures.empty());
    testing::TempDir dir("empty");
    write_suite_outputs(r, dir.path());
    CHECK(slurp(dir / "results.csv") == std::string(kResultsHeader) + "\n");
  }
  SUBCASE("rows are independent of the thread count") {
    ExperimentConfig cfg = small_config();
    cfg.record_acceptance = true;
    const SuiteResult a = run_suite(cfg);
    cfg.threads = 4;
    const SuiteResult b = run_suite(cfg);
    REQUIRE(a.rows.size() == 3 * 4 * 2 * 4);
    REQUIRE(b.rows.size() == a.rows.size());
    for (std::size_t k = 0; k < a.rows.size(); ++k) {
      ResultRow x = a.rows[k];
      ResultRow y = b.rows[k];
      x.wall_ms = y.wall_ms = 0.0;
      CHECK(format_row(x) == format_row(y));
    }
    REQUIRE(a.events.size() == b.events.size());
    for (std::size_t k = 0; k < a.events.size(); ++k) CHECK(format_row(a.events[k]) == format_row(b.events[k]));
    CHECK_FALSE(a.acceptance.empty());
  }
  SUBCASE("optimal flags match certified references") {
    ExperimentConfig cfg = small_config();
    const SuiteResult r = run_suite(cfg);
    for (const ResultRow& row : r.rows) {
      const Reference* ref = r.references.find(row.graph_id);
      REQUIRE(ref != nullptr);
      CHECK(ref->certified);
      CHECK(row.e_best >= ref->energy);
      CHECK(row.is_optimal == (row.e_best == ref->energy));
    }
    std::set<std::string> sources;
    for (const ResultRow& row : r.rows) sources.insert(row.source + "/" + row.param);
    CHECK(sources == std::set<std::string>{"SA/0", "CC/0", "RANDOM/0.2", "MC/0.5"});
  }
  SUBCASE("written outputs") {
    ExperimentConfig cfg = small_config();
    cfg.tune_lambda = true;
    cfg.tune_grid = {0.5, 1.0};
    cfg.tune_reps = 2;
    cfg.record_acceptance = true;
    const SuiteResult r = run_suite(cfg);
    CHECK(r.tuning.size() == 2);  // CC and MC; RANDOM is not tuned
    testing::TempDir dir("out");
    write_suite_outputs(r, dir.path());
    for (const char* f : {"results.csv", "summary.csv", "references.csv", "correlations.csv", "tuning.csv",
                          "acceptance.csv", "acceptance_summary.csv"}) {
      CHECK_MESSAGE(std::filesystem::exists(dir / f), f);
    }
    CHECK(first_line(dir / "tuning.csv") == "source,param,lambda_scale,percent_optimal,selected");
    CHECK(first_line(dir / "correlations.csv") == "graph_id,source,param,quality");
    CHECK(read_results_csv(dir / "results.csv").size() == r.rows.size());
  }
}

TEST_CASE("source labels") {
  ExperimentConfig cfg = small_config();
  cfg.sources = {CorrelationSource::QAOA, CorrelationSource::SDP};
  cfg.qaoa_depths = {1, 3};
  const auto specs = expand_sources(cfg);
  REQUIRE(specs.size() == 3);
  CHECK(specs[0].label() == "QAOA");
  CHECK(specs[0].param_label() == "1");
  CHECK(specs[1].param_label() == "3");
  CHECK(specs[2].label() == "SDP");
  CHECK(specs[2].param_label() == "0");
}
