// Command-line front end: instance suites, exact references, correlation
// matrices, single runs, benchmark suites, histograms, acceptance statistics.

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cgca/anneal.hpp"
#include "cgca/bench.hpp"
#include "cgca/classical.hpp"
#include "cgca/error.hpp"
#include "cgca/exact.hpp"
#include "cgca/quantum.hpp"
#include "cgca/text.hpp"

namespace fs = std::filesystem;
using namespace cgca;

namespace {

struct Globals {
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> out_dir;
};

// Every config key as --key (and --key-with-hyphens); later applied on top
// of the config file.
struct ConfigOverrides {
  std::string config_path;
  std::map<std::string, std::string> values;
  std::vector<std::pair<std::string, CLI::Option*>> options;

  void attach(CLI::App* sub) {
    sub->add_option("--config,-c", config_path, "experiment config file (key = value)");
    for (const ConfigKey& k : config_schema()) {
      if (k.name == "seed" || k.name == "threads" || k.name == "out_dir") continue;
      std::string names = "--" + k.name;
      std::string hyphen = k.name;
      for (char& c : hyphen) c = c == '_' ? '-' : c;
      if (hyphen != k.name) names += ",--" + hyphen;
      options.emplace_back(k.name, sub->add_option(names, values[k.name], k.help));
    }
  }

  ExperimentConfig build(const Globals& g) const {
    ExperimentConfig cfg = config_path.empty() ? ExperimentConfig{} : load_config(config_path);
    for (const auto& [name, opt] : options) {
      if (opt->count() > 0) set_config_value(cfg, name, values.at(name));
    }
    if (g.seed) cfg.seed = *g.seed;
    if (g.threads) cfg.threads = *g.threads;
    if (g.out_dir) cfg.out_dir = *g.out_dir;
    cfg.validate();
    return cfg;
  }
};

std::string fmt(double v) { return text::format_double(v); }

std::string lowercase(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

fs::path out_dir_of(const Globals& g) { return g.out_dir ? fs::path(*g.out_dir) : fs::path("out"); }

ProgressFn stderr_progress() {
  return [last = std::size_t{0}](std::size_t done, std::size_t total) mutable {
    const std::size_t pct = total == 0 ? 100 : done * 100 / total;
    if (pct >= last + 10 || done == total) {
      last = pct;
      std::fprintf(stderr, "  %zu/%zu runs (%zu%%)\n", done, total, pct);
    }
  };
}

void print_summary(const std::vector<SummaryRow>& rows) {
  std::printf("%-4s %-7s %-6s %8s %8s %8s %8s\n", "meth", "source", "param", "lambda", "budget",
              "opt%", "std");
  for (const SummaryRow& r : rows) {
    std::printf("%-4s %-7s %-6s %8s %8s %8.2f %8.2f\n", r.method.c_str(), r.source.c_str(),
                r.param.c_str(), fmt(r.lambda_scale).c_str(), fmt(r.budget_mult).c_str(),
                r.mean_percent_optimal, r.std_percent_optimal);
  }
}

int finish_suite(const SuiteResult& res, const fs::path& dir, const ExperimentConfig& cfg) {
  write_suite_outputs(res, dir);
  {
    std::ofstream out(dir / "config.txt");
    out << config_to_text(cfg);
  }
  for (const TaskFailure& f : res.failures) {
    std::fprintf(stderr, "run %zu failed: %s\n", f.index, f.message.c_str());
  }
  if (!res.failures.empty()) {
    std::fprintf(stderr, "%zu of %zu runs failed; partial results written to %s\n",
                 res.failures.size(), res.cells, dir.string().c_str());
    return 1;
  }
  return 0;
}

// ---- subcommands -----------------------------------------------------------

int cmd_gen(const Globals& g, int n, int degree, int count) {
  ExperimentConfig cfg;
  cfg.n = n;
  cfg.degree = degree;
  cfg.graphs = count;
  if (g.seed) cfg.seed = *g.seed;
  cfg.validate();
  const fs::path dir = out_dir_of(g);
  fs::create_directories(dir);
  for (const SuiteGraph& sg : load_suite(cfg)) {
    const fs::path path = dir / (sg.id + ".txt");
    write_instance(sg.inst, path);
    std::printf("%s\n", path.string().c_str());
  }
  return 0;
}

int cmd_exact(const Globals& g, const std::vector<std::string>& files) {
  ReferenceRegistry refs;
  std::printf("%-24s %4s %6s %10s %10s %8s %10s %8s\n", "graph", "n", "edges", "e_min", "e_max",
              "degen", "max_cut", "misfit");
  for (const std::string& file : files) {
    const Instance inst = read_instance(file);
    const ExactResult r = brute_force(inst, g.threads.value_or(1));
    const std::string id = fs::path(file).stem().string();
    refs.set(id, {r.e_min, true, "brute_force"});
    std::printf("%-24s %4d %6zu %10s %10s %8llu %10s %8.4f\n", id.c_str(), inst.n(), inst.num_edges(),
                fmt(r.e_min).c_str(), fmt(r.e_max).c_str(),
                static_cast<unsigned long long>(r.degeneracy),
                fmt(max_cut_value(inst, r.ground_states.front().x)).c_str(),
                misfit(inst, r.e_min));
  }
  const fs::path dir = out_dir_of(g);
  fs::create_directories(dir);
  refs.write_csv(dir / "references.csv");
  return 0;
}

struct CorrArgs {
  std::string instance;
  std::string source = "cc";
  double beta_s = 1.0;
  int depth = 1;
  int samples = 2000;
  int burn_in = 1000;
  int thin = 10;
  int rounds = 1000;
  int restarts = 10;
  std::optional<double> beta;
  std::optional<double> gamma;
  std::string out;
  std::string samples_out;
  std::string params_out;
};

int cmd_corr(const Globals& g, const CorrArgs& a) {
  const Instance inst = read_instance(a.instance);
  const std::uint64_t seed = g.seed.value_or(1);
  const std::string src = lowercase(a.source);
  const std::string id = fs::path(a.instance).stem().string();
  std::optional<CorrelationMatrix> z;

  if (src == "cc") {
    z = cc_correlations(inst);
  } else if (src == "mc") {
    MetropolisOptions mo;
    mo.burn_in = a.burn_in;
    mo.thin = a.thin;
    mo.n_samples = static_cast<std::size_t>(a.samples);
    SampleSet s = mh_sample(inst, a.beta_s, mo, seed);
    std::printf("acceptance %.4f  mean magnetization %.4f  approx ratio %s\n", s.acceptance_rate,
                s.mean_magnetization, fmt(s.mean_approx_ratio).c_str());
    if (s.equilibration_warning) {
      std::fprintf(stderr, "warning: |mean magnetization| > %g; chain may not be equilibrated\n",
                   kMagnetizationTolerance);
    }
    if (!a.samples_out.empty()) write_samples(s, a.samples_out);
    z = mc_correlations(s);
  } else if (src == "sdp") {
    SdpOptions so;
    so.seed = seed;
    SdpSolution sol = sdp_solve(inst, so);
    const RoundingResult rr = gw_round(inst, sol, a.rounds, mix64(seed));
    std::printf("sdp objective %s  sweeps %d  converged %d  mean rounded cut %s  best %s  ratio %.4f\n",
                fmt(sol.objective).c_str(), sol.sweeps, sol.converged ? 1 : 0,
                fmt(rr.mean_cut).c_str(), fmt(rr.best_cut).c_str(), rr.ratio);
    z = sdp_correlations(sol);
  } else if (src == "qaoa-sim") {
    QaoaOptimizeOptions qo;
    qo.seed = seed;
    qo.restarts = a.restarts;
    const QaoaOptimizeResult opt = qaoa_optimize(inst, a.depth, qo);
    std::printf("p=%d  <H_C> = %s  evaluations %zu%s\n", a.depth, fmt(opt.expected_energy).c_str(),
                opt.evaluations, opt.iteration_limit ? "  (iteration limit)" : "");
    if (!a.params_out.empty()) write_qaoa_params(opt.params, a.params_out);
    z = qaoa_correlations(qaoa_prepare(inst, opt.params));
  } else if (src == "qaoa-p1") {
    double beta = 0.0;
    double gamma = 0.0;
    if (a.beta && a.gamma) {
      beta = *a.beta;
      gamma = *a.gamma;
    } else {
      QaoaOptimizeOptions qo;
      qo.seed = seed;
      qo.restarts = a.restarts;
      const QaoaOptimizeResult opt = qaoa_p1_optimize(inst, qo);
      beta = opt.params.betas[0];
      gamma = opt.params.gammas[0];
    }
    std::printf("beta %s  gamma %s  <H_C> = %s\n", fmt(beta).c_str(), fmt(gamma).c_str(),
                fmt(qaoa_p1_energy(inst, beta, gamma)).c_str());
    if (!a.params_out.empty()) write_qaoa_params({1, {beta}, {gamma}}, a.params_out);
    z = qaoa_p1_correlations(inst, beta, gamma);
  } else {
    throw InvalidParameter("source must be cc, mc, sdp, qaoa-sim or qaoa-p1");
  }

  fs::path out = a.out;
  if (out.empty()) {
    fs::create_directories(out_dir_of(g));
    out = out_dir_of(g) / (id + "_" + src + ".corr");
  }
  write_correlations(*z, out);
  std::printf("%s\n", out.string().c_str());
  return 0;
}

struct RunArgs {
  std::string instance;
  std::string method = "ca";
  std::string source = "cc";
  std::string corr;
  double lambda_scale = 1.0;
  double p_const = 0.2;
  double budget = 100.0;
  double beta_f = 8.0;
  double beta_s = 1.0;
  int depth = 1;
  std::string orientation = "flipped";
  std::string events;
};

int cmd_run(const Globals& g, const RunArgs& a) {
  const Instance inst = read_instance(a.instance);
  const std::uint64_t seed = g.seed.value_or(1);
  const auto m = static_cast<std::uint64_t>(std::max(2.0, std::round(a.budget * inst.n())));
  RunRecord rec;
  const std::string method = lowercase(a.method);
  std::string source_label = "SA";
  std::string param_label = "0";
  if (method == "sa") {
    rec = run_sa(inst, a.beta_f, m, seed);
  } else if (method == "ca") {
    const auto orientation = lowercase(a.orientation) == "current" ? ClusterPolicy::Orientation::Current
                                                                   : ClusterPolicy::Orientation::Flipped;
    const std::string src = lowercase(a.source);
    if (a.corr.empty() && src == "random") {
      rec = run_ca(inst, nullptr, a.beta_f, m, 1.0, random_cluster_policy(a.p_const), seed);
      source_label = "RANDOM";
      param_label = fmt(a.p_const);
    } else {
      std::optional<CorrelationMatrix> z;
      if (!a.corr.empty()) {
        z = read_correlations(a.corr);
      } else {
        std::string upper = src;
        for (char& c : upper) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
        SourceSpec spec{parse_correlation_source(upper), 0.0};
        if (spec.source == CorrelationSource::MC) spec.param = a.beta_s;
        if (spec.source == CorrelationSource::QAOA) spec.param = a.depth;
        z = compute_correlations(inst, spec, ExperimentConfig{}, mix64(seed), std::nullopt);
      }
      rec = run_ca(inst, &*z, a.beta_f, m, a.lambda_scale, ClusterPolicy::correlation_guided(orientation),
                   seed);
      source_label = to_string(z->source());
      param_label = fmt(z->param());
    }
  } else {
    throw InvalidParameter("method must be sa or ca");
  }

  std::printf("e_best %s\n", fmt(rec.e_best).c_str());
  std::printf("max_cut %s\n", fmt(max_cut_value(inst, rec.x_best.x)).c_str());
  std::printf("proposals %llu  accepted %llu  flipped_spins %llu\n",
              static_cast<unsigned long long>(rec.evaluations),
              static_cast<unsigned long long>(rec.accepted),
              static_cast<unsigned long long>(rec.flipped_spins));
  std::printf("consumed %llu of %llu  final beta %s  wall_ms %.3f\n",
              static_cast<unsigned long long>(rec.schedule.consumed),
              static_cast<unsigned long long>(m - 1), fmt(rec.schedule.beta).c_str(),
              rec.wall_seconds * 1000.0);
  if (!a.events.empty()) {
    std::vector<AcceptanceRow> rows;
    const std::string id = fs::path(a.instance).stem().string();
    for (const AcceptanceEvent& ev : rec.events) rows.push_back({id, source_label, param_label, 0, ev});
    write_acceptance_csv(rows, a.events);
  }
  return 0;
}

int cmd_bench(const ExperimentConfig& cfg) {
  std::fprintf(stderr, "suite: %s\n", cfg.instances.empty() ? "generated" : "files");
  const SuiteResult res = run_suite(cfg, {}, stderr_progress());
  print_summary(res.summary);
  for (const TuningRow& t : res.tuning) {
    std::printf("tuned %s(%s): lambda_scale = %s\n", t.spec.label().c_str(),
                t.spec.param_label().c_str(), fmt(t.result.best).c_str());
  }
  return finish_suite(res, cfg.out_dir, cfg);
}

int cmd_accept(ExperimentConfig cfg) {
  cfg.record_acceptance = true;
  const SuiteResult res = run_suite(cfg, {}, stderr_progress());
  std::printf("%-4s %-7s %-6s %8s %8s %8s %8s %8s\n", "meth", "source", "param", "lambda", "records",
              "median", "q1", "q3");
  for (const AcceptanceSummaryRow& r : res.acceptance) {
    std::printf("%-4s %-7s %-6s %8s %8zu %8.4f %8.4f %8.4f\n", r.method.c_str(), r.source.c_str(),
                r.param.c_str(), fmt(r.lambda_scale).c_str(), r.stats.rates.size(), r.stats.median,
                r.stats.q1, r.stats.q3);
  }
  return finish_suite(res, cfg.out_dir, cfg);
}

int cmd_hist(const ExperimentConfig& cfg, const std::string& filter_name,
             const std::vector<std::string>& corr_files, const std::string& instance_file) {
  const EdgeFilter filter = parse_edge_filter(filter_name);
  std::vector<Histogram> hists;
  auto add = [&](const Histogram& h) {
    for (Histogram& existing : hists) {
      if (existing.source == h.source && existing.param == h.param) {
        existing.merge(h);
        return;
      }
    }
    hists.push_back(h);
  };

  if (!corr_files.empty()) {
    if (instance_file.empty()) throw InvalidParameter("--corr needs --instance");
    const Instance inst = read_instance(instance_file);
    for (const std::string& f : corr_files) add(correlation_histogram(read_correlations(f), inst, filter));
  } else {
    const std::vector<SuiteGraph> graphs = load_suite(cfg);
    std::vector<SourceSpec> specs;
    for (const SourceSpec& s : expand_sources(cfg)) {
      if (s.source != CorrelationSource::Random) specs.push_back(s);
    }
    std::vector<std::optional<Histogram>> parts(graphs.size() * specs.size());
    const auto failures = parallel_for(parts.size(), cfg.threads, [&](std::size_t cell) {
      const std::size_t gi = cell / specs.size();
      const std::size_t si = cell % specs.size();
      const CorrelationMatrix z = compute_correlations(
          graphs[gi].inst, specs[si], cfg, derive_seed(cfg.seed, {0x68, gi, si}), std::nullopt);
      parts[cell] = correlation_histogram(z, graphs[gi].inst, filter);
    });
    if (!failures.empty()) throw Error(failures.front().message);
    for (std::size_t si = 0; si < specs.size(); ++si) {
      for (std::size_t gi = 0; gi < graphs.size(); ++gi) add(*parts[gi * specs.size() + si]);
    }
  }

  std::printf("%-7s %-6s %8s %10s\n", "source", "param", "edges", "frac<0");
  for (const Histogram& h : hists) {
    const auto total = h.total();
    if (total == 0) {
      std::fprintf(stderr, "warning: no %s edges selected for %s(%s)\n", to_string(filter).c_str(),
                   h.source.c_str(), h.param.c_str());
    }
    std::printf("%-7s %-6s %8llu %10.4f\n", h.source.c_str(), h.param.c_str(),
                static_cast<unsigned long long>(total),
                total == 0 ? 0.0 : static_cast<double>(h.negative) / static_cast<double>(total));
  }
  fs::create_directories(cfg.out_dir);
  const fs::path out = fs::path(cfg.out_dir) / "histogram.csv";
  write_histogram_csv(hists, out);
  std::printf("%s\n", out.string().c_str());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Correlation-guided cluster annealing for Ising spin glasses and Max-Cut"};
  app.require_subcommand(1);
  app.fallthrough();

  Globals globals;
  app.add_option("--seed", globals.seed, "master seed");
  app.add_option("--threads", globals.threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--out-dir,--out_dir", globals.out_dir, "output directory");

  int gen_n = 16;
  int gen_d = 3;
  int gen_count = 20;
  auto* gen = app.add_subcommand("gen", "generate random regular instances with +-1 weights");
  gen->add_option("--n", gen_n, "vertices");
  gen->add_option("--degree,-d", gen_d, "degree");
  gen->add_option("--count", gen_count, "number of graphs");

  std::vector<std::string> exact_files;
  auto* exact = app.add_subcommand("exact", "exhaustive ground states (n <= 30)");
  exact->add_option("instances", exact_files, "instance files")->required();

  CorrArgs corr_args;
  auto* corr = app.add_subcommand("corr", "compute a correlation matrix");
  corr->add_option("instance", corr_args.instance, "instance file")->required();
  corr->add_option("--source,-s", corr_args.source, "cc | mc | sdp | qaoa-sim | qaoa-p1");
  corr->add_option("--beta-s", corr_args.beta_s, "MC sampling inverse temperature");
  corr->add_option("--depth,-p", corr_args.depth, "QAOA depth");
  corr->add_option("--samples", corr_args.samples, "MC samples");
  corr->add_option("--burn-in", corr_args.burn_in, "MC burn-in sweeps");
  corr->add_option("--thin", corr_args.thin, "MC sweeps between samples");
  corr->add_option("--rounds", corr_args.rounds, "GW hyperplane roundings");
  corr->add_option("--restarts", corr_args.restarts, "QAOA optimizer restarts");
  corr->add_option("--beta", corr_args.beta, "fixed depth-1 mixer angle");
  corr->add_option("--gamma", corr_args.gamma, "fixed depth-1 cost angle");
  corr->add_option("--out,-o", corr_args.out, "output correlation file");
  corr->add_option("--samples-out", corr_args.samples_out, "write MC bitstrings here");
  corr->add_option("--params-out", corr_args.params_out, "write QAOA angles here");

  RunArgs run_args;
  auto* run = app.add_subcommand("run", "single annealing run");
  run->add_option("instance", run_args.instance, "instance file")->required();
  run->add_option("--method,-m", run_args.method, "sa | ca");
  run->add_option("--source,-s", run_args.source, "cc | random | mc | sdp | qaoa");
  run->add_option("--corr", run_args.corr, "precomputed correlation file");
  run->add_option("--lambda-scale,--lambda", run_args.lambda_scale, "link probability scale");
  run->add_option("--p-const", run_args.p_const, "constant link probability for random clusters");
  run->add_option("--budget", run_args.budget, "iterations as a multiple of n");
  run->add_option("--beta-f", run_args.beta_f, "final inverse temperature");
  run->add_option("--beta-s", run_args.beta_s, "MC sampling inverse temperature");
  run->add_option("--depth,-p", run_args.depth, "QAOA depth");
  run->add_option("--orientation", run_args.orientation, "flipped | current");
  run->add_option("--events", run_args.events, "write the acceptance log CSV here");

  ConfigOverrides bench_cfg;
  auto* bench = app.add_subcommand("bench", "run an experiment suite");
  bench_cfg.attach(bench);

  ConfigOverrides hist_cfg;
  std::string hist_filter = "ferro";
  std::vector<std::string> hist_corr;
  std::string hist_instance;
  auto* hist = app.add_subcommand("hist", "histogram correlations over edges");
  hist_cfg.attach(hist);
  hist->add_option("--filter", hist_filter, "all | ferro | antiferro (sign of J)");
  hist->add_option("--corr", hist_corr, "correlation files instead of a generated suite");
  hist->add_option("--instance", hist_instance, "instance for --corr");

  ConfigOverrides accept_cfg;
  auto* accept = app.add_subcommand("accept", "cluster-flip acceptance statistics");
  accept_cfg.attach(accept);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) return cmd_gen(globals, gen_n, gen_d, gen_count);
    if (*exact) return cmd_exact(globals, exact_files);
    if (*corr) return cmd_corr(globals, corr_args);
    if (*run) return cmd_run(globals, run_args);
    if (*bench) return cmd_bench(bench_cfg.build(globals));
    if (*hist) return cmd_hist(hist_cfg.build(globals), hist_filter, hist_corr, hist_instance);
    if (*accept) return cmd_accept(accept_cfg.build(globals));
  } catch (const cgca::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  }
  return 0;
}
