#include "cgca/bench.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <set>
#include <sstream>

#include "cgca/classical.hpp"
#include "cgca/error.hpp"
#include "cgca/exact.hpp"
#include "cgca/quantum.hpp"
#include "cgca/text.hpp"

namespace cgca {

namespace {

// Seed-derivation tags, one per kind of task.
constexpr std::uint64_t kTagGraph = 0x67;
constexpr std::uint64_t kTagReference = 0x72;
constexpr std::uint64_t kTagCorrelation = 0x63;
constexpr std::uint64_t kTagTune = 0x74;
constexpr std::uint64_t kTagRun = 0x61;

std::string upper(std::string s) {
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

std::string lower(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) {
    if (c == '"') q += '"';
    q += c;
  }
  return q + '"';
}

std::vector<std::string> csv_split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(std::move(cur));
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(std::move(cur));
  return out;
}

std::string fixed3(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  return buf;
}

std::uint64_t budget_iterations(double mult, int n) {
  const double m = std::llround(mult * n);
  return static_cast<std::uint64_t>(std::max(2.0, m));
}

// ---- config value codecs --------------------------------------------------

template <typename T>
T parse_value(const std::string& raw) {
  const std::string_view v = text::trim(raw);
  if constexpr (std::is_same_v<T, std::string>) {
    return std::string(v);
  } else if constexpr (std::is_same_v<T, bool>) {
    const std::string s = lower(std::string(v));
    if (s == "true" || s == "1" || s == "yes" || s == "on") return true;
    if (s == "false" || s == "0" || s == "no" || s == "off") return false;
    throw ConfigError("expected a boolean, got '" + s + "'");
  } else {
    return text::parse_number<T>(v, 0, "number");
  }
}

template <typename T>
std::string format_value(const T& v) {
  if constexpr (std::is_same_v<T, std::string>) {
    return v;
  } else if constexpr (std::is_same_v<T, bool>) {
    return v ? "true" : "false";
  } else if constexpr (std::is_floating_point_v<T>) {
    return text::format_double(v);
  } else {
    return std::to_string(v);
  }
}

template <typename T, typename Parse>
std::vector<T> parse_list(const std::string& raw, Parse&& parse) {
  std::vector<T> out;
  if (text::trim(raw).empty()) return out;
  for (const std::string& tok : text::split(raw, ',')) out.push_back(parse(std::string(text::trim(tok))));
  return out;
}

template <typename T, typename Format>
std::string format_list(const std::vector<T>& v, Format&& format) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i > 0) out += ',';
    out += format(v[i]);
  }
  return out;
}

template <typename T>
ConfigKey scalar_key(std::string name, std::string help, T ExperimentConfig::*member) {
  return {std::move(name), std::move(help),
          [member](ExperimentConfig& c, const std::string& v) { c.*member = parse_value<T>(v); },
          [member](const ExperimentConfig& c) { return format_value(c.*member); }};
}

template <typename T>
ConfigKey list_key(std::string name, std::string help, std::vector<T> ExperimentConfig::*member) {
  return {std::move(name), std::move(help),
          [member](ExperimentConfig& c, const std::string& v) {
            c.*member = parse_list<T>(v, [](const std::string& s) { return parse_value<T>(s); });
          },
          [member](const ExperimentConfig& c) {
            return format_list(c.*member, [](const T& x) { return format_value(x); });
          }};
}

std::string orientation_name(ClusterPolicy::Orientation o) {
  return o == ClusterPolicy::Orientation::Flipped ? "flipped" : "current";
}

std::vector<ConfigKey> build_schema() {
  using C = ExperimentConfig;
  std::vector<ConfigKey> keys;
  keys.push_back(list_key("instances", "instance files; when set, n/degree/graphs are ignored",
                          &C::instances));
  keys.push_back(scalar_key("n", "vertices per generated graph", &C::n));
  keys.push_back(scalar_key("degree", "degree of generated regular graphs", &C::degree));
  keys.push_back(scalar_key("graphs", "number of generated graphs", &C::graphs));
  keys.push_back(scalar_key("graph_seed", "seed for graph generation (0: use seed)", &C::graph_seed));
  keys.push_back({"methods", "SA and/or CA",
                  [](C& c, const std::string& v) {
                    c.methods = parse_list<Method>(v, [](const std::string& s) { return parse_method(s); });
                  },
                  [](const C& c) {
                    return format_list(c.methods, [](Method m) { return to_string(m); });
                  }});
  keys.push_back({"sources", "correlation sources for CA: CC, RANDOM, MC, SDP, QAOA",
                  [](C& c, const std::string& v) {
                    c.sources = parse_list<CorrelationSource>(
                        v, [](const std::string& s) { return parse_correlation_source(upper(s)); });
                  },
                  [](const C& c) {
                    return format_list(c.sources, [](CorrelationSource s) { return to_string(s); });
                  }});
  keys.push_back(list_key("beta_s", "sampling inverse temperatures for MC", &C::beta_s));
  keys.push_back(list_key("qaoa_depths", "circuit depths for QAOA", &C::qaoa_depths));
  keys.push_back(list_key("random_p", "constant link probabilities for RANDOM", &C::random_p));
  keys.push_back(list_key("lambda_scales", "lambda_scale values for untuned runs", &C::lambda_scales));
  keys.push_back(list_key("budgets", "iteration budgets as multiples of n", &C::budgets));
  keys.push_back(scalar_key("reps", "repetitions per (graph, variant, budget)", &C::reps));
  keys.push_back(scalar_key("beta_f", "final inverse temperature", &C::beta_f));
  keys.push_back({"orientation", "link score orientation: flipped or current",
                  [](C& c, const std::string& v) {
                    const std::string s = lower(std::string(text::trim(v)));
                    if (s == "flipped") {
                      c.orientation = ClusterPolicy::Orientation::Flipped;
                    } else if (s == "current") {
                      c.orientation = ClusterPolicy::Orientation::Current;
                    } else {
                      throw ConfigError("orientation must be 'flipped' or 'current'");
                    }
                  },
                  [](const C& c) { return orientation_name(c.orientation); }});
  keys.push_back(scalar_key("seed", "master seed", &C::seed));
  keys.push_back(scalar_key("threads", "worker threads", &C::threads));
  keys.push_back(scalar_key("out_dir", "output directory", &C::out_dir));
  keys.push_back(scalar_key("reference", "auto, brute_force or long_sa", &C::reference));
  keys.push_back(scalar_key("long_sa_reps", "repetitions for long-SA references", &C::long_sa_reps));
  keys.push_back(scalar_key("long_sa_budget", "long-SA budget as a multiple of n", &C::long_sa_budget));
  keys.push_back(scalar_key("record_acceptance", "log every proposal inside the beta window",
                            &C::record_acceptance));
  keys.push_back(scalar_key("window_lo", "lower end of the acceptance window", &C::window_lo));
  keys.push_back(scalar_key("window_hi", "upper end of the acceptance window", &C::window_hi));
  keys.push_back(scalar_key("tune_lambda", "select lambda_scale per source before running",
                            &C::tune_lambda));
  keys.push_back(list_key("tune_grid", "lambda_scale values tried when tuning", &C::tune_grid));
  keys.push_back(scalar_key("tune_budget", "tuning budget as a multiple of n", &C::tune_budget));
  keys.push_back(scalar_key("tune_reps", "tuning repetitions per graph and value", &C::tune_reps));
  keys.push_back(scalar_key("mc_burn_in", "Metropolis burn-in sweeps", &C::mc_burn_in));
  keys.push_back(scalar_key("mc_thin", "Metropolis sweeps between samples", &C::mc_thin));
  keys.push_back(scalar_key("mc_samples", "Metropolis samples per correlation matrix", &C::mc_samples));
  keys.push_back(scalar_key("sdp_rank", "SDP vector dimension (0: automatic)", &C::sdp_rank));
  keys.push_back(scalar_key("sdp_max_sweeps", "SDP coordinate sweeps", &C::sdp_max_sweeps));
  keys.push_back(scalar_key("sdp_tol", "SDP relative convergence tolerance", &C::sdp_tol));
  keys.push_back(scalar_key("gw_rounds", "hyperplane roundings for SDP quality", &C::gw_rounds));
  keys.push_back(scalar_key("qaoa_restarts", "optimizer restarts per QAOA depth", &C::qaoa_restarts));
  keys.push_back(scalar_key("qaoa_max_iterations", "optimizer iterations per restart (0: 500p)",
                            &C::qaoa_max_iterations));
  return keys;
}

}  // namespace

// ---------------------------------------------------------------------------

std::string to_string(Method m) { return m == Method::SA ? "SA" : "CA"; }

Method parse_method(const std::string& s) {
  const std::string u = upper(s);
  if (u == "SA") return Method::SA;
  if (u == "CA") return Method::CA;
  throw ConfigError("unknown method '" + s + "'");
}

const std::vector<ConfigKey>& config_schema() {
  static const std::vector<ConfigKey> schema = build_schema();
  return schema;
}

void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  for (const ConfigKey& k : config_schema()) {
    if (k.name != key) continue;
    try {
      k.set(cfg, value);
    } catch (const ConfigError& e) {
      throw ConfigError(key + ": " + e.what());
    } catch (const Error& e) {
      throw ConfigError(key + ": " + e.what());
    }
    return;
  }
  throw ConfigError("unknown key '" + key + "'");
}

ExperimentConfig parse_config(const std::string& body) {
  ExperimentConfig cfg;
  std::istringstream in(body);
  std::string raw;
  std::size_t line = 0;
  std::set<std::string> seen;
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string_view content = text::trim(std::string_view(raw).substr(0, hash));
    if (content.empty()) continue;
    const auto eq = content.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError("line " + std::to_string(line) + ": expected 'key = value'");
    }
    const std::string key(text::trim(content.substr(0, eq)));
    const std::string value(text::trim(content.substr(eq + 1)));
    if (!seen.insert(key).second) {
      throw ConfigError("line " + std::to_string(line) + ": duplicate key '" + key + "'");
    }
    try {
      set_config_value(cfg, key, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(line) + ": " + e.what());
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_to_text(const ExperimentConfig& cfg) {
  std::string out;
  for (const ConfigKey& k : config_schema()) out += k.name + " = " + k.get(cfg) + "\n";
  return out;
}

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (instances.empty()) {
    if (n < 2) fail("n must be >= 2");
    if (graphs < 0) fail("graphs must be >= 0");
    if (degree < 1 || degree >= n || (static_cast<long>(n) * degree) % 2 != 0) {
      fail("degree must satisfy 1 <= degree < n with n*degree even");
    }
  }
  if (methods.empty()) fail("methods is empty");
  if (reps < 0) fail("reps must be >= 0");
  if (threads < 1) fail("threads must be >= 1");
  if (!(beta_f > 0.0)) fail("beta_f must be positive");
  if (budgets.empty()) fail("budgets is empty");
  for (double b : budgets) {
    if (!(b > 0.0)) fail("budgets must be positive multiples of n");
  }
  const bool ca = std::find(methods.begin(), methods.end(), Method::CA) != methods.end();
  if (ca) {
    if (sources.empty()) fail("CA needs at least one source");
    for (CorrelationSource s : sources) {
      if (s == CorrelationSource::MC && beta_s.empty()) fail("MC needs beta_s values");
      if (s == CorrelationSource::QAOA && qaoa_depths.empty()) fail("QAOA needs qaoa_depths values");
      if (s == CorrelationSource::Random && random_p.empty()) fail("RANDOM needs random_p values");
    }
    if (lambda_scales.empty()) fail("lambda_scales is empty");
    for (double l : lambda_scales) {
      if (!(l >= 0.0)) fail("lambda_scales must be >= 0");
    }
    if (tune_lambda && tune_grid.empty()) fail("tune_grid is empty");
    for (double l : tune_grid) {
      if (!(l >= 0.0)) fail("tune_grid values must be >= 0");
    }
    for (double p : random_p) {
      if (!(p >= 0.0 && p <= 1.0)) fail("random_p values must lie in [0,1]");
    }
    for (int d : qaoa_depths) {
      if (d < 1) fail("qaoa_depths must be >= 1");
    }
    for (double b : beta_s) {
      if (!(b >= 0.0)) fail("beta_s must be >= 0");
    }
  }
  if (reference != "auto" && reference != "brute_force" && reference != "long_sa") {
    fail("reference must be auto, brute_force or long_sa");
  }
  if (long_sa_reps < 1 || !(long_sa_budget > 0.0)) fail("long-SA settings must be positive");
  if (!(window_lo <= window_hi)) fail("window_lo must not exceed window_hi");
  if (tune_lambda && (tune_reps < 1 || !(tune_budget > 0.0))) fail("tuning settings must be positive");
  if (mc_burn_in < 0 || mc_thin < 1 || mc_samples < 1) fail("invalid Metropolis settings");
  if (gw_rounds < 1 || sdp_max_sweeps < 1) fail("invalid SDP settings");
  if (qaoa_restarts < 1) fail("qaoa_restarts must be >= 1");
}

std::vector<SuiteGraph> load_suite(const ExperimentConfig& cfg) {
  std::vector<SuiteGraph> out;
  if (!cfg.instances.empty()) {
    std::set<std::string> ids;
    for (const std::string& file : cfg.instances) {
      const std::filesystem::path path(file);
      std::string id = path.stem().string();
      if (!ids.insert(id).second) throw ConfigError("duplicate instance id '" + id + "'");
      out.push_back({std::move(id), read_instance(path)});
    }
    return out;
  }
  const std::uint64_t base = cfg.graph_seed != 0 ? cfg.graph_seed : cfg.seed;
  for (int g = 0; g < cfg.graphs; ++g) {
    char id[64];
    std::snprintf(id, sizeof(id), "rrg_n%d_d%d_g%03d", cfg.n, cfg.degree, g);
    const std::uint64_t seed = derive_seed(
        base, {kTagGraph, static_cast<std::uint64_t>(cfg.n), static_cast<std::uint64_t>(cfg.degree),
               static_cast<std::uint64_t>(g)});
    out.push_back({id, generate_regular(cfg.n, cfg.degree, seed)});
  }
  return out;
}

// ---------------------------------------------------------------------------

Reference register_reference(const Instance& inst, ReferenceMethod method, std::uint64_t seed,
                             int threads, int reps, double budget_mult, double beta_f) {
  if (method == ReferenceMethod::BruteForce) {
    if (inst.n() > kBruteForceMaxN) {
      throw SizeLimit("brute-force reference needs n <= " + std::to_string(kBruteForceMaxN));
    }
    return {brute_force(inst, threads).e_min, true, "brute_force"};
  }
  if (reps < 1) throw InvalidParameter("long-SA reference needs reps >= 1");
  const std::uint64_t m = budget_iterations(budget_mult, inst.n());
  std::vector<double> best(static_cast<std::size_t>(reps));
  const auto failures = parallel_for(best.size(), threads, [&](std::size_t r) {
    best[r] = run_sa(inst, beta_f, m, derive_seed(seed, {r}), RunOptions{false}).e_best;
  });
  if (!failures.empty()) throw Error("long-SA reference failed: " + failures.front().message);
  return {*std::min_element(best.begin(), best.end()), false, "long_sa"};
}

void ReferenceRegistry::set(const std::string& graph_id, Reference ref) {
  refs_[graph_id] = std::move(ref);
}

const Reference* ReferenceRegistry::find(const std::string& graph_id) const {
  const auto it = refs_.find(graph_id);
  return it == refs_.end() ? nullptr : &it->second;
}

bool ReferenceRegistry::offer(const std::string& graph_id, double energy) {
  const auto it = refs_.find(graph_id);
  if (it == refs_.end() || !(energy < it->second.energy)) return false;
  if (it->second.certified) {
    throw Error("energy " + text::format_double(energy) + " is below the certified optimum of " +
                graph_id);
  }
  it->second.energy = energy;
  it->second.method = "improved";
  return true;
}

void ReferenceRegistry::write_csv(const std::filesystem::path& path) const {
  auto out = open_out(path);
  out << "graph_id,energy,certified,method\n";
  for (const auto& [id, ref] : refs_) {
    out << csv_field(id) << ',' << text::format_double(ref.energy) << ',' << (ref.certified ? 1 : 0)
        << ',' << ref.method << '\n';
  }
}

ReferenceRegistry ReferenceRegistry::read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  ReferenceRegistry reg;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (line == 1) {
      if (text::trim(raw) != "graph_id,energy,certified,method") {
        throw ParseError("unexpected reference header", line);
      }
      continue;
    }
    if (text::trim(raw).empty()) continue;
    const auto f = csv_split(raw);
    if (f.size() != 4) throw ParseError("expected 4 fields", line);
    reg.set(f[0], {text::parse_number<double>(f[1], line, "energy"), f[2] == "1", f[3]});
  }
  return reg;
}

// ---------------------------------------------------------------------------

std::string format_row(const ResultRow& r) {
  std::string s;
  s += csv_field(r.graph_id) + ',' + r.method + ',' + r.source + ',' + r.param + ',';
  s += text::format_double(r.lambda_scale) + ',' + std::to_string(r.budget_m) + ',';
  s += std::to_string(r.rep) + ',' + text::format_double(r.e_best) + ',';
  s += (r.is_optimal ? "1" : "0");
  s += ',' + fixed3(r.wall_ms) + ',' + std::to_string(r.seed);
  return s;
}

std::string format_row(const AcceptanceRow& r) {
  std::string s;
  s += csv_field(r.graph_id) + ',' + r.source + ',' + r.param + ',' + std::to_string(r.rep) + ',';
  s += text::format_double(r.event.beta) + ',' + std::to_string(r.event.cluster_size) + ',';
  s += text::format_double(r.event.delta_e) + ',' + (r.event.accepted ? "1" : "0");
  return s;
}

void write_results_csv(std::span<const ResultRow> rows, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << kResultsHeader << '\n';
  for (const ResultRow& r : rows) out << format_row(r) << '\n';
}

void write_acceptance_csv(std::span<const AcceptanceRow> rows, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << kAcceptanceHeader << '\n';
  for (const AcceptanceRow& r : rows) out << format_row(r) << '\n';
}

std::vector<ResultRow> read_results_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string());
  std::vector<ResultRow> rows;
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    if (!raw.empty() && raw.back() == '\r') raw.pop_back();
    if (line == 1) {
      if (raw != kResultsHeader) throw ParseError("unexpected results header", line);
      continue;
    }
    if (raw.empty()) continue;
    const auto f = csv_split(raw);
    if (f.size() != 11) throw ParseError("expected 11 fields", line);
    ResultRow r;
    r.graph_id = f[0];
    r.method = f[1];
    r.source = f[2];
    r.param = f[3];
    r.lambda_scale = text::parse_number<double>(f[4], line, "lambda_scale");
    r.budget_m = text::parse_number<std::uint64_t>(f[5], line, "budget_m");
    r.rep = text::parse_number<int>(f[6], line, "rep");
    r.e_best = text::parse_number<double>(f[7], line, "e_best");
    r.is_optimal = f[8] == "1";
    r.wall_ms = text::parse_number<double>(f[9], line, "wall_ms");
    r.seed = text::parse_number<std::uint64_t>(f[10], line, "seed");
    rows.push_back(std::move(r));
  }
  return rows;
}

void rederive_optimal(std::span<ResultRow> rows, const ReferenceRegistry& refs) {
  for (ResultRow& r : rows) {
    const Reference* ref = refs.find(r.graph_id);
    r.is_optimal = ref != nullptr && r.e_best == ref->energy;
  }
}

std::vector<SummaryRow> summarize(std::span<const ResultRow> rows) {
  struct Group {
    SummaryRow head;
    std::vector<std::string> order;
    std::map<std::string, std::pair<std::size_t, std::size_t>> per_graph;  // optimal, total
  };
  std::vector<Group> groups;
  std::map<std::string, std::size_t> index;
  for (const ResultRow& r : rows) {
    const std::string key = r.method + '\x1f' + r.source + '\x1f' + r.param + '\x1f' +
                            text::format_double(r.lambda_scale) + '\x1f' +
                            text::format_double(r.budget_mult) + '\x1f' +
                            (r.budget_mult > 0.0 ? std::string() : std::to_string(r.budget_m));
    auto [it, fresh] = index.try_emplace(key, groups.size());
    if (fresh) {
      Group g;
      g.head.method = r.method;
      g.head.source = r.source;
      g.head.param = r.param;
      g.head.lambda_scale = r.lambda_scale;
      g.head.budget_mult = r.budget_mult > 0.0 ? r.budget_mult : static_cast<double>(r.budget_m);
      groups.push_back(std::move(g));
    }
    Group& g = groups[it->second];
    auto [gi, gnew] = g.per_graph.try_emplace(r.graph_id, 0, 0);
    if (gnew) g.order.push_back(r.graph_id);
    gi->second.first += r.is_optimal ? 1 : 0;
    gi->second.second += 1;
  }
  std::vector<SummaryRow> out;
  out.reserve(groups.size());
  for (Group& g : groups) {
    std::vector<double> pct;
    std::size_t runs = 0;
    for (const std::string& id : g.order) {
      const auto [opt, total] = g.per_graph[id];
      pct.push_back(100.0 * static_cast<double>(opt) / static_cast<double>(total));
      runs += total;
    }
    double mean = 0.0;
    for (double p : pct) mean += p;
    mean /= static_cast<double>(pct.size());
    double var = 0.0;
    for (double p : pct) var += (p - mean) * (p - mean);
    var /= static_cast<double>(pct.size());
    g.head.graphs = pct.size();
    g.head.runs = runs;
    g.head.mean_percent_optimal = mean;
    g.head.std_percent_optimal = std::sqrt(var);
    out.push_back(g.head);
  }
  return out;
}

void write_summary_csv(std::span<const SummaryRow> rows, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "method,source,param,lambda_scale,budget_mult,graphs,runs,mean_percent_optimal,"
         "std_percent_optimal\n";
  for (const SummaryRow& r : rows) {
    out << r.method << ',' << r.source << ',' << r.param << ',' << text::format_double(r.lambda_scale)
        << ',' << text::format_double(r.budget_mult) << ',' << r.graphs << ',' << r.runs << ','
        << text::format_double(r.mean_percent_optimal) << ','
        << text::format_double(r.std_percent_optimal) << '\n';
  }
}

void write_acceptance_summary_csv(std::span<const AcceptanceSummaryRow> rows,
                                  const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "method,source,param,lambda_scale,budget_mult,records,median,q1,q3,min,max,mean\n";
  for (const AcceptanceSummaryRow& r : rows) {
    const AcceptanceSummary& s = r.stats;
    out << r.method << ',' << r.source << ',' << r.param << ',' << text::format_double(r.lambda_scale)
        << ',' << text::format_double(r.budget_mult) << ',' << s.rates.size() << ','
        << text::format_double(s.median) << ',' << text::format_double(s.q1) << ','
        << text::format_double(s.q3) << ',' << text::format_double(s.min) << ','
        << text::format_double(s.max) << ',' << text::format_double(s.mean) << '\n';
  }
}

// ---------------------------------------------------------------------------

std::string to_string(EdgeFilter f) {
  switch (f) {
    case EdgeFilter::All: return "all";
    case EdgeFilter::Ferromagnetic: return "ferro";
    case EdgeFilter::Antiferromagnetic: return "antiferro";
  }
  return "all";
}

EdgeFilter parse_edge_filter(const std::string& s) {
  const std::string l = lower(s);
  if (l == "all") return EdgeFilter::All;
  if (l == "ferro" || l == "ferromagnetic") return EdgeFilter::Ferromagnetic;
  if (l == "antiferro" || l == "antiferromagnetic") return EdgeFilter::Antiferromagnetic;
  throw InvalidParameter("edge filter must be all, ferro or antiferro");
}

std::uint64_t Histogram::total() const {
  std::uint64_t t = 0;
  for (auto c : counts) t += c;
  return t;
}

void Histogram::merge(const Histogram& other) {
  for (int b = 0; b < kBins; ++b) counts[static_cast<std::size_t>(b)] += other.counts[static_cast<std::size_t>(b)];
  negative += other.negative;
}

int histogram_bin(double z) {
  const int b = static_cast<int>(std::floor((z + 1.0) * 0.5 * Histogram::kBins));
  return std::clamp(b, 0, Histogram::kBins - 1);
}

Histogram correlation_histogram(const CorrelationMatrix& z, const Instance& inst, EdgeFilter filter) {
  if (z.n() != inst.n()) throw InvalidParameter("correlation matrix does not match instance");
  Histogram h;
  h.source = to_string(z.source());
  h.param = z.source() == CorrelationSource::CC || z.source() == CorrelationSource::SDP
                ? "0"
                : text::format_double(z.param());
  for (const Edge& e : inst.edges()) {
    const double j = e.coupling();
    if (filter == EdgeFilter::Ferromagnetic && !(j > 0.0)) continue;
    if (filter == EdgeFilter::Antiferromagnetic && !(j < 0.0)) continue;
    const double v = z(e.i, e.j);
    ++h.counts[static_cast<std::size_t>(histogram_bin(v))];
    if (v < 0.0) ++h.negative;
  }
  return h;
}

void write_histogram_csv(std::span<const Histogram> hists, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "source,param,bin_index,bin_lo,bin_hi,count\n";
  for (const Histogram& h : hists) {
    for (int b = 0; b < Histogram::kBins; ++b) {
      out << h.source << ',' << h.param << ',' << b << ',' << text::format_double(Histogram::bin_lo(b))
          << ',' << text::format_double(Histogram::bin_hi(b)) << ','
          << h.counts[static_cast<std::size_t>(b)] << '\n';
    }
  }
}

// ---------------------------------------------------------------------------

std::string SourceSpec::label() const { return to_string(source); }

std::string SourceSpec::param_label() const {
  switch (source) {
    case CorrelationSource::CC:
    case CorrelationSource::SDP:
      return "0";
    case CorrelationSource::QAOA:
      return std::to_string(static_cast<int>(param));
    default:
      return text::format_double(param);
  }
}

std::vector<SourceSpec> expand_sources(const ExperimentConfig& cfg) {
  std::vector<SourceSpec> out;
  for (CorrelationSource s : cfg.sources) {
    switch (s) {
      case CorrelationSource::MC:
        for (double b : cfg.beta_s) out.push_back({s, b});
        break;
      case CorrelationSource::QAOA:
        for (int p : cfg.qaoa_depths) out.push_back({s, static_cast<double>(p)});
        break;
      case CorrelationSource::Random:
        for (double p : cfg.random_p) out.push_back({s, p});
        break;
      default:
        out.push_back({s, 0.0});
    }
  }
  return out;
}

CorrelationMatrix compute_correlations(const Instance& inst, const SourceSpec& spec,
                                       const ExperimentConfig& cfg, std::uint64_t seed,
                                       std::optional<double> reference_energy,
                                       CorrelationInfo* info) {
  std::optional<double> ref_cut;
  if (reference_energy && !inst.has_field()) ref_cut = 0.5 * (inst.total_weight() - *reference_energy);
  double quality = std::numeric_limits<double>::quiet_NaN();
  auto finish = [&](CorrelationMatrix z) {
    if (info != nullptr) {
      info->spec = spec;
      info->quality = quality;
    }
    return z;
  };

  switch (spec.source) {
    case CorrelationSource::CC:
      return finish(cc_correlations(inst));
    case CorrelationSource::MC: {
      MetropolisOptions mo;
      mo.burn_in = cfg.mc_burn_in;
      mo.thin = cfg.mc_thin;
      mo.n_samples = static_cast<std::size_t>(cfg.mc_samples);
      // A NaN cut skips the sampler's own brute-force reference.
      mo.reference_cut = ref_cut.value_or(std::numeric_limits<double>::quiet_NaN());
      SampleSet samples = mh_sample(inst, spec.param, mo, seed);
      if (ref_cut) quality = samples.mean_approx_ratio;
      return finish(mc_correlations(samples));
    }
    case CorrelationSource::SDP: {
      SdpOptions so;
      so.rank = cfg.sdp_rank;
      so.max_sweeps = cfg.sdp_max_sweeps;
      so.tol = cfg.sdp_tol;
      so.seed = seed;
      SdpSolution sol = sdp_solve(inst, so);
      const RoundingResult rr = gw_round(inst, sol, cfg.gw_rounds, mix64(seed));
      if (ref_cut && *ref_cut != 0.0) quality = rr.mean_cut / *ref_cut;
      return finish(sdp_correlations(sol));
    }
    case CorrelationSource::QAOA: {
      const int p = static_cast<int>(spec.param);
      QaoaOptimizeOptions qo;
      qo.restarts = cfg.qaoa_restarts;
      qo.max_iterations = cfg.qaoa_max_iterations;
      qo.seed = seed;
      if (inst.n() <= kQaoaMaxQubits) {
        const QaoaOptimizeResult opt = qaoa_optimize(inst, p, qo);
        const QaoaState state = qaoa_prepare(inst, opt.params);
        if (ref_cut && *ref_cut != 0.0) {
          quality = 0.5 * (inst.total_weight() - state.expected_energy) / *ref_cut;
        }
        return finish(qaoa_correlations(state));
      }
      if (p != 1) {
        throw SizeLimit("QAOA depth " + std::to_string(p) + " needs n <= " +
                        std::to_string(kQaoaMaxQubits));
      }
      const QaoaOptimizeResult opt = qaoa_p1_optimize(inst, qo);
      if (ref_cut && *ref_cut != 0.0) {
        quality = 0.5 * (inst.total_weight() - opt.expected_energy) / *ref_cut;
      }
      return finish(qaoa_p1_correlations(inst, opt.params.betas[0], opt.params.gammas[0]));
    }
    case CorrelationSource::Random:
      break;
  }
  throw InvalidParameter("random clusters have no correlation matrix");
}

// ---------------------------------------------------------------------------

TuneResult tune_lambda_scale(std::span<const SuiteGraph> graphs,
                             std::span<const CorrelationMatrix> z, const ReferenceRegistry& refs,
                             std::span<const double> grid, double budget_mult, int reps,
                             double beta_f, std::uint64_t seed, int threads,
                             ClusterPolicy::Orientation orientation) {
  if (grid.empty()) throw ConfigError("tuning grid is empty");
  if (reps < 1) throw ConfigError("tuning needs reps >= 1");
  if (graphs.empty()) throw ConfigError("tuning needs at least one graph");
  if (z.size() != graphs.size()) throw InvalidParameter("one correlation matrix per graph expected");
  std::vector<double> reference(graphs.size());
  for (std::size_t g = 0; g < graphs.size(); ++g) {
    const Reference* ref = refs.find(graphs[g].id);
    if (ref == nullptr) throw ConfigError("no reference registered for " + graphs[g].id);
    reference[g] = ref->energy;
  }

  const std::size_t G = graphs.size();
  const auto R = static_cast<std::size_t>(reps);
  std::vector<char> hit(grid.size() * G * R, 0);
  const auto failures = parallel_for(hit.size(), threads, [&](std::size_t cell) {
    const std::size_t r = cell % R;
    const std::size_t g = (cell / R) % G;
    const std::size_t k = cell / (R * G);
    const Instance& inst = graphs[g].inst;
    const ClusterContext ctx = ClusterContext::make(
        inst, &z[g], grid[k], ClusterPolicy::correlation_guided(orientation));
    // Same seed for every grid value: differences come from lambda alone.
    const RunRecord rec = run_ca(ctx, beta_f, budget_iterations(budget_mult, inst.n()),
                                 derive_seed(seed, {kTagTune, g, r}), RunOptions{false});
    hit[cell] = rec.e_best == reference[g] ? 1 : 0;
  });
  if (!failures.empty()) throw Error("tuning failed: " + failures.front().message);

  TuneResult out;
  out.grid.assign(grid.begin(), grid.end());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    double pct = 0.0;
    for (std::size_t g = 0; g < G; ++g) {
      std::size_t opt = 0;
      for (std::size_t r = 0; r < R; ++r) opt += static_cast<std::size_t>(hit[(k * G + g) * R + r]);
      pct += 100.0 * static_cast<double>(opt) / static_cast<double>(R);
    }
    out.percent_optimal.push_back(pct / static_cast<double>(G));
  }
  std::size_t best = 0;
  for (std::size_t k = 1; k < grid.size(); ++k) {
    const double a = out.percent_optimal[k];
    const double b = out.percent_optimal[best];
    if (a > b || (a == b && grid[k] < grid[best])) best = k;
  }
  out.best = grid[best];
  return out;
}

// ---------------------------------------------------------------------------

namespace {

struct Variant {
  Method method = Method::SA;
  int source = -1;  // index into the expanded sources; -1 for SA
  double lambda_scale = 0.0;
};

}  // namespace

SuiteResult run_suite(const ExperimentConfig& cfg, ReferenceRegistry refs,
                      const ProgressFn& progress) {
  cfg.validate();
  SuiteResult result;
  const std::vector<SuiteGraph> graphs = load_suite(cfg);
  const std::size_t G = graphs.size();

  // References.
  {
    std::vector<std::optional<Reference>> fresh(G);
    const auto failures = parallel_for(G, cfg.threads, [&](std::size_t g) {
      if (refs.find(graphs[g].id) != nullptr) return;
      const Instance& inst = graphs[g].inst;
      ReferenceMethod method = ReferenceMethod::LongSA;
      if (cfg.reference == "brute_force" ||
          (cfg.reference == "auto" && inst.n() <= kBruteForceMaxN)) {
        method = ReferenceMethod::BruteForce;
      }
      fresh[g] = register_reference(inst, method, derive_seed(cfg.seed, {kTagReference, g}), 1,
                                    cfg.long_sa_reps, cfg.long_sa_budget, cfg.beta_f);
    });
    if (!failures.empty()) {
      throw Error("reference for " + graphs[failures.front().index].id + ": " +
                  failures.front().message);
    }
    for (std::size_t g = 0; g < G; ++g) {
      if (fresh[g]) refs.set(graphs[g].id, *fresh[g]);
    }
  }

  const bool run_ca_method =
      std::find(cfg.methods.begin(), cfg.methods.end(), Method::CA) != cfg.methods.end();
  const std::vector<SourceSpec> specs = run_ca_method ? expand_sources(cfg) : std::vector<SourceSpec>{};
  const std::size_t S = specs.size();

  // Correlation matrices, one per (graph, non-random source).
  std::vector<std::optional<CorrelationMatrix>> z(G * S);
  std::vector<CorrelationInfo> infos(G * S);
  {
    const auto failures = parallel_for(G * S, cfg.threads, [&](std::size_t cell) {
      const std::size_t g = cell / S;
      const std::size_t s = cell % S;
      if (specs[s].source == CorrelationSource::Random) return;
      infos[cell].graph_id = graphs[g].id;
      const Reference* ref = refs.find(graphs[g].id);
      z[cell] = compute_correlations(graphs[g].inst, specs[s], cfg,
                                     derive_seed(cfg.seed, {kTagCorrelation, g, s}),
                                     ref ? std::optional<double>(ref->energy) : std::nullopt,
                                     &infos[cell]);
    });
    if (!failures.empty()) {
      const std::size_t cell = failures.front().index;
      throw Error("correlations " + specs[cell % S].label() + "(" + specs[cell % S].param_label() +
                  ") for " + graphs[cell / S].id + ": " + failures.front().message);
    }
    for (std::size_t cell = 0; cell < G * S; ++cell) {
      if (z[cell]) result.correlations.push_back(infos[cell]);
    }
  }

  // Variants, with optional lambda tuning per source.
  std::vector<Variant> variants;
  for (Method m : cfg.methods) {
    if (m == Method::SA) {
      variants.push_back({Method::SA, -1, 0.0});
      continue;
    }
    for (std::size_t s = 0; s < S; ++s) {
      if (specs[s].source == CorrelationSource::Random) {
        variants.push_back({Method::CA, static_cast<int>(s), 0.0});
        continue;
      }
      if (cfg.tune_lambda && G > 0) {
        std::vector<CorrelationMatrix> zs;
        zs.reserve(G);
        for (std::size_t g = 0; g < G; ++g) zs.push_back(*z[g * S + s]);
        TuneResult tr = tune_lambda_scale(graphs, zs, refs, cfg.tune_grid, cfg.tune_budget,
                                          cfg.tune_reps, cfg.beta_f,
                                          derive_seed(cfg.seed, {kTagTune, s}), cfg.threads,
                                          cfg.orientation);
        variants.push_back({Method::CA, static_cast<int>(s), tr.best});
        result.tuning.push_back({specs[s], std::move(tr)});
        continue;
      }
      for (double l : cfg.lambda_scales) variants.push_back({Method::CA, static_cast<int>(s), l});
    }
  }
  const std::size_t V = variants.size();
  const std::size_t B = cfg.budgets.size();
  const auto R = static_cast<std::size_t>(cfg.reps);

  // Cluster contexts are shared read-only by every rep of a (graph, variant).
  std::vector<std::optional<ClusterContext>> contexts(G * V);
  for (std::size_t g = 0; g < G; ++g) {
    for (std::size_t v = 0; v < V; ++v) {
      const Variant& var = variants[v];
      if (var.method == Method::SA) continue;
      const SourceSpec& spec = specs[static_cast<std::size_t>(var.source)];
      if (spec.source == CorrelationSource::Random) {
        contexts[g * V + v] =
            ClusterContext::make(graphs[g].inst, nullptr, 1.0, random_cluster_policy(spec.param));
      } else {
        contexts[g * V + v] =
            ClusterContext::make(graphs[g].inst, &*z[g * S + static_cast<std::size_t>(var.source)],
                                 var.lambda_scale, ClusterPolicy::correlation_guided(cfg.orientation));
      }
    }
  }

  const std::size_t total = G * V * B * R;
  result.cells = total;
  std::vector<std::optional<ResultRow>> rows(total);
  std::vector<std::vector<AcceptanceEvent>> events(cfg.record_acceptance ? total : 0);
  std::mutex progress_mu;
  std::size_t done = 0;

  result.failures = parallel_for(total, cfg.threads, [&](std::size_t cell) {
    const std::size_t r = cell % R;
    const std::size_t b = (cell / R) % B;
    const std::size_t v = (cell / (R * B)) % V;
    const std::size_t g = cell / (R * B * V);
    const Instance& inst = graphs[g].inst;
    const Variant& var = variants[v];
    const std::uint64_t m = budget_iterations(cfg.budgets[b], inst.n());
    const std::uint64_t seed = derive_seed(cfg.seed, {kTagRun, g, v, b, r});
    RunOptions opts;
    opts.record_events = cfg.record_acceptance;
    opts.window_lo = cfg.window_lo;
    opts.window_hi = cfg.window_hi;

    RunRecord rec = var.method == Method::SA
                        ? run_sa(inst, cfg.beta_f, m, seed, opts)
                        : run_ca(*contexts[g * V + v], cfg.beta_f, m, seed, opts);
    ResultRow row;
    row.graph_id = graphs[g].id;
    row.method = to_string(var.method);
    if (var.method == Method::SA) {
      row.source = "SA";
      row.param = "0";
    } else {
      const SourceSpec& spec = specs[static_cast<std::size_t>(var.source)];
      row.source = spec.label();
      row.param = spec.param_label();
    }
    row.lambda_scale = var.lambda_scale;
    row.budget_m = m;
    row.budget_mult = cfg.budgets[b];
    row.rep = static_cast<int>(r);
    row.e_best = rec.e_best;
    row.wall_ms = rec.wall_seconds * 1000.0;
    row.seed = seed;
    rows[cell] = std::move(row);
    if (cfg.record_acceptance) events[cell] = std::move(rec.events);
    if (progress) {
      std::lock_guard lock(progress_mu);
      progress(++done, total);
    }
  });

  for (std::size_t cell = 0; cell < total; ++cell) {
    if (rows[cell]) result.rows.push_back(std::move(*rows[cell]));
  }
  for (const ResultRow& row : result.rows) refs.offer(row.graph_id, row.e_best);
  rederive_optimal(result.rows, refs);
  result.summary = summarize(result.rows);

  if (cfg.record_acceptance) {
    for (std::size_t v = 0; v < V; ++v) {
      for (std::size_t b = 0; b < B; ++b) {
        std::vector<double> rates;
        std::string source;
        std::string param;
        for (std::size_t g = 0; g < G; ++g) {
          for (std::size_t r = 0; r < R; ++r) {
            const std::size_t cell = ((g * V + v) * B + b) * R + r;
            std::size_t n_in = 0;
            std::size_t n_acc = 0;
            for (const AcceptanceEvent& ev : events[cell]) {
              ++n_in;
              n_acc += ev.accepted ? 1 : 0;
            }
            if (n_in > 0) rates.push_back(static_cast<double>(n_acc) / static_cast<double>(n_in));
          }
        }
        const Variant& var = variants[v];
        if (var.method == Method::SA) {
          source = "SA";
          param = "0";
        } else {
          source = specs[static_cast<std::size_t>(var.source)].label();
          param = specs[static_cast<std::size_t>(var.source)].param_label();
        }
        for (std::size_t g = 0; g < G; ++g) {
          for (std::size_t r = 0; r < R; ++r) {
            const std::size_t cell = ((g * V + v) * B + b) * R + r;
            for (const AcceptanceEvent& ev : events[cell]) {
              result.events.push_back({graphs[g].id, source, param, static_cast<int>(r), ev});
            }
          }
        }
        if (rates.empty()) continue;
        result.acceptance.push_back(
            {to_string(var.method), source, param, var.lambda_scale, cfg.budgets[b], summarize_rates(rates)});
      }
    }
  }

  result.references = std::move(refs);
  return result;
}

void write_suite_outputs(const SuiteResult& result, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_results_csv(result.rows, dir / "results.csv");
  write_summary_csv(result.summary, dir / "summary.csv");
  result.references.write_csv(dir / "references.csv");
  {
    auto out = open_out(dir / "correlations.csv");
    out << "graph_id,source,param,quality\n";
    for (const CorrelationInfo& c : result.correlations) {
      out << csv_field(c.graph_id) << ',' << c.spec.label() << ',' << c.spec.param_label() << ','
          << (std::isnan(c.quality) ? std::string("nan") : text::format_double(c.quality)) << '\n';
    }
  }
  if (!result.tuning.empty()) {
    auto out = open_out(dir / "tuning.csv");
    out << "source,param,lambda_scale,percent_optimal,selected\n";
    for (const TuningRow& t : result.tuning) {
      for (std::size_t k = 0; k < t.result.grid.size(); ++k) {
        out << t.spec.label() << ',' << t.spec.param_label() << ','
            << text::format_double(t.result.grid[k]) << ','
            << text::format_double(t.result.percent_optimal[k]) << ','
            << (t.result.grid[k] == t.result.best ? 1 : 0) << '\n';
      }
    }
  }
  if (!result.events.empty()) write_acceptance_csv(result.events, dir / "acceptance.csv");
  if (!result.acceptance.empty()) {
    write_acceptance_summary_csv(result.acceptance, dir / "acceptance_summary.csv");
  }
}

}  // namespace cgca
