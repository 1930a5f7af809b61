#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <algorithm>

#include "cgca/anneal.hpp"
#include "cgca/bench.hpp"
#include "cgca/classical.hpp"
#include "cgca/cluster.hpp"
#include "cgca/correlation.hpp"
#include "cgca/error.hpp"
#include "cgca/exact.hpp"
#include "cgca/instance.hpp"
#include "cgca/quantum.hpp"
#include "cgca/rng.hpp"

namespace py = pybind11;
using namespace cgca;

namespace {

std::vector<Spin> to_spins(const std::vector<int>& x) {
  std::vector<Spin> out;
  out.reserve(x.size());
  for (int s : x) {
    if (s != 1 && s != -1) throw InvalidParameter("spins must be +1 or -1");
    out.push_back(static_cast<Spin>(s));
  }
  return out;
}

std::vector<int> from_spins(std::span<const Spin> x) { return {x.begin(), x.end()}; }

py::array_t<double> to_numpy(const CorrelationMatrix& z) {
  const auto n = static_cast<py::ssize_t>(z.n());
  py::array_t<double> out({n, n});
  std::copy(z.values().begin(), z.values().end(), out.mutable_data());
  return out;
}

CorrelationMatrix from_numpy(py::array_t<double, py::array::c_style | py::array::forcecast> a,
                             CorrelationSource source, double param) {
  if (a.ndim() != 2 || a.shape(0) != a.shape(1)) throw InvalidParameter("Z must be a square matrix");
  const auto n = static_cast<int>(a.shape(0));
  return {n, std::vector<double>(a.data(), a.data() + a.size()), source, param};
}

ClusterPolicy::Orientation parse_orientation(const std::string& s) {
  if (s == "flipped") return ClusterPolicy::Orientation::Flipped;
  if (s == "current") return ClusterPolicy::Orientation::Current;
  throw InvalidParameter("orientation must be 'flipped' or 'current'");
}

py::dict record_dict(const RunRecord& r) {
  py::list events;
  for (const auto& e : r.events) {
    events.append(py::make_tuple(e.beta, e.cluster_size, e.delta_e, e.accepted));
  }
  py::dict d;
  d["e_best"] = r.e_best;
  d["x_best"] = from_spins(r.x_best.x);
  d["e_final"] = r.e_final;
  d["evaluations"] = r.evaluations;
  d["flipped_spins"] = r.flipped_spins;
  d["accepted"] = r.accepted;
  d["final_beta"] = r.schedule.beta;
  d["events"] = events;
  return d;
}

RunOptions run_options(bool record_events, double window_lo, double window_hi) {
  RunOptions o;
  o.record_events = record_events;
  o.window_lo = window_lo;
  o.window_hi = window_hi;
  return o;
}

}  // namespace

PYBIND11_MODULE(_cgca, m) {
  m.doc() = "Correlation-guided cluster annealing for Ising spin glasses";

  auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<InvalidParameter>(m, "InvalidParameter", base.ptr());
  py::register_exception<GenerationFailure>(m, "GenerationFailure", base.ptr());
  py::register_exception<SizeLimit>(m, "SizeLimit", base.ptr());
  py::register_exception<DegenerateTopology>(m, "DegenerateTopology", base.ptr());
  py::register_exception<DegenerateCorrelation>(m, "DegenerateCorrelation", base.ptr());
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());

  py::class_<Instance>(m, "Instance")
      .def(py::init([](int n, const std::vector<std::tuple<int, int, double>>& edges,
                       std::vector<double> field) {
             std::vector<Edge> es;
             es.reserve(edges.size());
             for (const auto& [i, j, w] : edges) es.push_back({i, j, w});
             return Instance(n, std::move(es), std::move(field));
           }),
           py::arg("n"), py::arg("edges"), py::arg("field") = std::vector<double>{},
           "Graph on n vertices from (i, j, weight) triples; weight is the Max-Cut weight A_ij.")
      .def_property_readonly("n", &Instance::n)
      .def_property_readonly("num_edges", &Instance::num_edges)
      .def_property_readonly("edges",
                             [](const Instance& g) {
                               std::vector<std::tuple<int, int, double>> out;
                               for (const Edge& e : g.edges()) out.emplace_back(e.i, e.j, e.weight);
                               return out;
                             })
      .def_property_readonly("total_weight", &Instance::total_weight)
      .def("degree", &Instance::degree)
      .def("coupling", &Instance::coupling_between)
      .def("__eq__", [](const Instance& a, const Instance& b) { return a == b; })
      .def("__repr__", [](const Instance& g) {
        return "<Instance n=" + std::to_string(g.n()) + " edges=" + std::to_string(g.num_edges()) + ">";
      });

  m.def("generate_regular", &generate_regular, py::arg("n"), py::arg("d"), py::arg("seed"));
  m.def("read_instance", [](const std::string& p) { return read_instance(p); });
  m.def("write_instance", [](const Instance& g, const std::string& p) { write_instance(g, p); });
  m.def("energy", [](const Instance& g, const std::vector<int>& x) { return energy(g, to_spins(x)); });
  m.def("cut_value",
        [](const Instance& g, const std::vector<int>& x) { return max_cut_value(g, to_spins(x)); });
  m.def("misfit", &misfit);
  m.def("brute_force", [](const Instance& g, int threads) {
    const ExactResult r = brute_force(g, threads);
    py::list states;
    for (const auto& s : r.ground_states) states.append(from_spins(s.x));
    py::dict d;
    d["e_min"] = r.e_min;
    d["e_max"] = r.e_max;
    d["degeneracy"] = r.degeneracy;
    d["ground_states"] = states;
    return d;
  }, py::arg("instance"), py::arg("threads") = 1);
  m.def("exact_correlations", [](const Instance& g, double beta_s) {
    return to_numpy(exact_boltzmann_correlations(g, beta_s));
  }, py::arg("instance"), py::arg("beta_s"));

  m.def("cc_correlations", [](const Instance& g) { return to_numpy(cc_correlations(g)); });
  m.def("mc_correlations",
        [](const Instance& g, double beta_s, int samples, int burn_in, int thin, std::uint64_t seed) {
          MetropolisOptions o;
          o.burn_in = burn_in;
          o.thin = thin;
          o.n_samples = static_cast<std::size_t>(samples);
          const SampleSet s = mh_sample(g, beta_s, o, seed);
          return py::make_tuple(to_numpy(mc_correlations(s)), s.equilibration_warning);
        },
        py::arg("instance"), py::arg("beta_s"), py::arg("samples") = 2000,
        py::arg("burn_in") = 1000, py::arg("thin") = 10, py::arg("seed") = 1,
        "Returns (Z, equilibration_warning).");
  m.def("sdp_correlations",
        [](const Instance& g, int rounds, std::uint64_t seed) {
          SdpSolution sol = sdp_solve(g);
          const RoundingResult r = gw_round(g, sol, rounds, seed);
          py::dict d;
          d["objective"] = sol.objective;
          d["best_cut"] = r.best_cut;
          d["mean_cut"] = r.mean_cut;
          d["ratio"] = r.ratio;
          return py::make_tuple(to_numpy(sdp_correlations(sol)), d);
        },
        py::arg("instance"), py::arg("rounds") = 1000, py::arg("seed") = 1,
        "Returns (Z, rounding statistics).");

  m.def("qaoa_optimize",
        [](const Instance& g, int p, int restarts, std::uint64_t seed) {
          QaoaOptimizeOptions o;
          o.restarts = restarts;
          o.seed = seed;
          const QaoaOptimizeResult r = qaoa_optimize(g, p, o);
          return py::make_tuple(r.params.betas, r.params.gammas, r.expected_energy);
        },
        py::arg("instance"), py::arg("p"), py::arg("restarts") = 10, py::arg("seed") = 1,
        "Returns (betas, gammas, <H>).");
  m.def("qaoa_correlations",
        [](const Instance& g, const std::vector<double>& betas, const std::vector<double>& gammas) {
          QaoaParams params{static_cast<int>(betas.size()), betas, gammas};
          const QaoaState st = qaoa_prepare(g, params);
          return py::make_tuple(to_numpy(qaoa_correlations(st)), st.expected_energy);
        },
        py::arg("instance"), py::arg("betas"), py::arg("gammas"),
        "Statevector correlations; returns (Z, <H>).");
  m.def("qaoa_p1_correlations", [](const Instance& g, double beta1, double gamma1) {
    return to_numpy(qaoa_p1_correlations(g, beta1, gamma1));
  });
  m.def("qaoa_p1_energy", &qaoa_p1_energy);

  m.def("percolation_lambda",
        [](const Instance& g, py::array_t<double> z) {
          return percolation_lambda(g, from_numpy(z, CorrelationSource::CC, 0.0)).lambda_perc;
        });
  m.def("link_probability", &link_probability, py::arg("score"), py::arg("lambda_scale"),
        py::arg("lambda_perc"));
  m.def("create_cluster",
        [](const Instance& g, py::array_t<double> z, const std::vector<int>& x, int seed_vertex,
           double lambda_scale, std::uint64_t seed, const std::string& orientation) {
          const CorrelationMatrix zm = from_numpy(z, CorrelationSource::CC, 0.0);
          const auto ctx = ClusterContext::make(
              g, &zm, lambda_scale, ClusterPolicy::correlation_guided(parse_orientation(orientation)));
          Rng rng(seed);
          const auto spins = to_spins(x);
          return create_cluster(ctx, spins, seed_vertex, rng).members;
        },
        py::arg("instance"), py::arg("z"), py::arg("x"), py::arg("seed_vertex"),
        py::arg("lambda_scale") = 1.0, py::arg("seed") = 1, py::arg("orientation") = "flipped");
  m.def("delta_energy", [](const Instance& g, const std::vector<int>& x, const std::vector<int>& members) {
    return delta_energy(g, to_spins(x), members);
  });

  m.def("run_ca",
        [](const Instance& g, py::object z, double beta_f, std::uint64_t m_budget, double lambda_scale,
           std::uint64_t seed, const std::string& orientation, double p_const, bool record_events,
           double window_lo, double window_hi) {
          const auto opts = run_options(record_events, window_lo, window_hi);
          if (z.is_none()) {
            return record_dict(run_ca(g, nullptr, beta_f, m_budget, 0.0,
                                      random_cluster_policy(p_const), seed, opts));
          }
          const CorrelationMatrix zm = from_numpy(z.cast<py::array_t<double>>(), CorrelationSource::CC, 0.0);
          return record_dict(run_ca(g, &zm, beta_f, m_budget, lambda_scale,
                                    ClusterPolicy::correlation_guided(parse_orientation(orientation)),
                                    seed, opts));
        },
        py::arg("instance"), py::arg("z"), py::arg("beta_f"), py::arg("m"),
        py::arg("lambda_scale") = 1.0, py::arg("seed") = 1, py::arg("orientation") = "flipped",
        py::arg("p_const") = 0.2, py::arg("record_events") = false, py::arg("window_lo") = 1.0,
        py::arg("window_hi") = 8.0,
        "Cluster annealing. With z=None clusters use the constant link probability p_const.");
  m.def("run_sa",
        [](const Instance& g, double beta_f, std::uint64_t m_budget, std::uint64_t seed,
           bool record_events, double window_lo, double window_hi) {
          return record_dict(run_sa(g, beta_f, m_budget, seed,
                                    run_options(record_events, window_lo, window_hi)));
        },
        py::arg("instance"), py::arg("beta_f"), py::arg("m"), py::arg("seed") = 1,
        py::arg("record_events") = false, py::arg("window_lo") = 1.0, py::arg("window_hi") = 8.0);

  m.def("correlation_histogram",
        [](const Instance& g, py::array_t<double> z, const std::string& filter) {
          const Histogram h = correlation_histogram(from_numpy(z, CorrelationSource::CC, 0.0), g,
                                                    parse_edge_filter(filter));
          return h.counts;
        },
        py::arg("instance"), py::arg("z"), py::arg("filter") = "ferro");

  m.def("run_bench",
        [](const std::string& config_text, const std::string& out_dir) {
          ExperimentConfig cfg = parse_config(config_text);
          if (!out_dir.empty()) cfg.out_dir = out_dir;
          cfg.validate();
          const SuiteResult r = run_suite(cfg);
          write_suite_outputs(r, cfg.out_dir);
          py::list summary;
          for (const SummaryRow& s : r.summary) {
            py::dict d;
            d["method"] = s.method;
            d["source"] = s.source;
            d["param"] = s.param;
            d["lambda_scale"] = s.lambda_scale;
            d["budget_mult"] = s.budget_mult;
            d["mean_percent_optimal"] = s.mean_percent_optimal;
            d["std_percent_optimal"] = s.std_percent_optimal;
            summary.append(d);
          }
          return summary;
        },
        py::arg("config_text"), py::arg("out_dir") = "",
        "Runs a configured suite, writes its CSVs and returns the summary rows.");
}
