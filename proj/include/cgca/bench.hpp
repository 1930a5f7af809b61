#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cgca/anneal.hpp"
#include "cgca/cluster.hpp"
#include "cgca/correlation.hpp"
#include "cgca/instance.hpp"
#include "cgca/parallel.hpp"

namespace cgca {

enum class Method { SA, CA };
std::string to_string(Method m);
Method parse_method(const std::string& s);

// Experiment description. Text form is "key = value" per line, '#' starts a
// comment, lists are comma separated. See config_schema() for every key.
struct ExperimentConfig {
  // Instances: explicit files, or a generated d-regular suite.
  std::vector<std::string> instances;
  int n = 16;
  int degree = 3;
  int graphs = 20;
  std::uint64_t graph_seed = 0;  // 0: use `seed`

  std::vector<Method> methods{Method::SA, Method::CA};
  std::vector<CorrelationSource> sources{CorrelationSource::CC};
  std::vector<double> beta_s{1.0};
  std::vector<int> qaoa_depths{1};
  std::vector<double> random_p{0.2};
  std::vector<double> lambda_scales{1.0};
  std::vector<double> budgets{100.0};  // multiples of n
  int reps = 100;
  double beta_f = 8.0;
  ClusterPolicy::Orientation orientation = ClusterPolicy::Orientation::Flipped;

  std::uint64_t seed = 1;
  int threads = 1;
  std::string out_dir = "out";

  std::string reference = "auto";  // auto | brute_force | long_sa
  int long_sa_reps = 50;
  double long_sa_budget = 10000.0;  // multiple of n

  bool record_acceptance = false;
  double window_lo = 1.0;
  double window_hi = 8.0;

  // Pick lambda_scale per (source, param) from `tune_grid` before the main
  // runs; `lambda_scales` is then ignored for tuned sources.
  bool tune_lambda = false;
  std::vector<double> tune_grid{0.1, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0, 3.0, 5.0, 7.5, 10.0};
  double tune_budget = 100.0;
  int tune_reps = 20;

  int mc_burn_in = 1000;
  int mc_thin = 10;
  int mc_samples = 2000;
  int sdp_rank = 0;
  int sdp_max_sweeps = 10000;
  double sdp_tol = 1e-8;
  int gw_rounds = 1000;
  int qaoa_restarts = 10;
  int qaoa_max_iterations = 0;

  void validate() const;
};

struct ConfigKey {
  std::string name;
  std::string help;
  std::function<void(ExperimentConfig&, const std::string&)> set;
  std::function<std::string(const ExperimentConfig&)> get;
};

const std::vector<ConfigKey>& config_schema();

// Throws ConfigError on an unknown key or a malformed value.
void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);
ExperimentConfig parse_config(const std::string& text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string config_to_text(const ExperimentConfig& cfg);

struct SuiteGraph {
  std::string id;
  Instance inst;
};

std::vector<SuiteGraph> load_suite(const ExperimentConfig& cfg);

// --------------------------------------------------------------------------
// References

enum class ReferenceMethod { BruteForce, LongSA };

struct Reference {
  double energy = 0.0;
  bool certified = false;
  std::string method;  // "brute_force" | "long_sa" | "improved"
};

// Brute force is exact and needs n <= 30 (SizeLimit otherwise). Long SA
// keeps the best of `reps` runs of budget_mult * n iterations at beta_f.
Reference register_reference(const Instance& inst, ReferenceMethod method, std::uint64_t seed,
                             int threads = 1, int reps = 50, double budget_mult = 10000.0,
                             double beta_f = 8.0);

class ReferenceRegistry {
 public:
  void set(const std::string& graph_id, Reference ref);
  const Reference* find(const std::string& graph_id) const;
  // Lowers an uncertified reference when `energy` beats it; returns true on
  // update. A certified reference beaten by a valid energy is a bug and
  // throws.
  bool offer(const std::string& graph_id, double energy);
  bool empty() const noexcept { return refs_.empty(); }
  const std::map<std::string, Reference>& entries() const noexcept { return refs_; }

  // graph_id,energy,certified,method
  void write_csv(const std::filesystem::path& path) const;
  static ReferenceRegistry read_csv(const std::filesystem::path& path);

 private:
  std::map<std::string, Reference> refs_;
};

// --------------------------------------------------------------------------
// Results

inline constexpr const char* kResultsHeader =
    "graph_id,method,source,param,lambda_scale,budget_m,rep,e_best,is_optimal,wall_ms,seed";
inline constexpr const char* kAcceptanceHeader =
    "graph_id,source,param,rep,beta,cluster_size,delta_e,accepted";

struct ResultRow {
  std::string graph_id;
  std::string method;
  std::string source;
  std::string param;
  double lambda_scale = 0.0;
  std::uint64_t budget_m = 0;
  int rep = 0;
  double e_best = 0.0;
  bool is_optimal = false;
  double wall_ms = 0.0;
  std::uint64_t seed = 0;
  double budget_mult = 0.0;  // not written; used for aggregation
};

struct AcceptanceRow {
  std::string graph_id;
  std::string source;
  std::string param;
  int rep = 0;
  AcceptanceEvent event;
};

std::string format_row(const ResultRow& row);
std::string format_row(const AcceptanceRow& row);
void write_results_csv(std::span<const ResultRow> rows, const std::filesystem::path& path);
void write_acceptance_csv(std::span<const AcceptanceRow> rows, const std::filesystem::path& path);
std::vector<ResultRow> read_results_csv(const std::filesystem::path& path);

// Re-derives is_optimal from the registry (exact comparison). Rows of graphs
// without a reference are marked not optimal.
void rederive_optimal(std::span<ResultRow> rows, const ReferenceRegistry& refs);

// Percent-optimal per curve point: mean over graphs of each graph's percent
// of optimal reps, and the population standard deviation across graphs.
struct SummaryRow {
  std::string method;
  std::string source;
  std::string param;
  double lambda_scale = 0.0;
  double budget_mult = 0.0;
  std::size_t graphs = 0;
  std::size_t runs = 0;
  double mean_percent_optimal = 0.0;
  double std_percent_optimal = 0.0;
};

std::vector<SummaryRow> summarize(std::span<const ResultRow> rows);
void write_summary_csv(std::span<const SummaryRow> rows, const std::filesystem::path& path);

struct AcceptanceSummaryRow {
  std::string method;
  std::string source;
  std::string param;
  double lambda_scale = 0.0;
  double budget_mult = 0.0;
  AcceptanceSummary stats;
};

void write_acceptance_summary_csv(std::span<const AcceptanceSummaryRow> rows,
                                  const std::filesystem::path& path);

// --------------------------------------------------------------------------
// Correlation histograms

enum class EdgeFilter { All, Ferromagnetic, Antiferromagnetic };  // by sign of J
std::string to_string(EdgeFilter f);
EdgeFilter parse_edge_filter(const std::string& s);

struct Histogram {
  static constexpr int kBins = 40;
  std::string source;
  std::string param;
  std::vector<std::uint64_t> counts = std::vector<std::uint64_t>(kBins, 0);
  std::uint64_t negative = 0;  // filtered edges with Z < 0

  std::uint64_t total() const;
  static double bin_lo(int b) { return -1.0 + 2.0 * b / kBins; }
  static double bin_hi(int b) { return -1.0 + 2.0 * (b + 1) / kBins; }
  void merge(const Histogram& other);
};

// Bin of z in 40 equal bins over [-1, 1]; z = 1 falls in the last bin.
int histogram_bin(double z);

// Counts Z_ij over edges selected by `filter`. An empty selection yields an
// all-zero histogram.
Histogram correlation_histogram(const CorrelationMatrix& z, const Instance& inst, EdgeFilter filter);

// source,param,bin_index,bin_lo,bin_hi,count
void write_histogram_csv(std::span<const Histogram> hists, const std::filesystem::path& path);

// --------------------------------------------------------------------------
// Correlation sources inside a suite

struct SourceSpec {
  CorrelationSource source = CorrelationSource::CC;
  double param = 0.0;  // beta_s, depth or p_const; 0 when unused
  std::string label() const;        // "CC", "MC", ...
  std::string param_label() const;  // "0" when unused
};

std::vector<SourceSpec> expand_sources(const ExperimentConfig& cfg);

struct CorrelationInfo {
  std::string graph_id;
  SourceSpec spec;
  double quality = 0.0;  // mean approximation ratio of the source's bitstrings; NaN if unknown
};

// Builds Z for one graph. `reference_energy` feeds approximation ratios.
CorrelationMatrix compute_correlations(const Instance& inst, const SourceSpec& spec,
                                       const ExperimentConfig& cfg, std::uint64_t seed,
                                       std::optional<double> reference_energy,
                                       CorrelationInfo* info = nullptr);

// --------------------------------------------------------------------------
// Tuning and suites

struct TuneResult {
  std::vector<double> grid;
  std::vector<double> percent_optimal;  // mean over graphs, per grid value
  double best = 0.0;
};

// Argmax of percent-optimal over the grid; ties go to the smallest value.
// Every graph needs a reference (ConfigError otherwise).
TuneResult tune_lambda_scale(std::span<const SuiteGraph> graphs,
                             std::span<const CorrelationMatrix> z, const ReferenceRegistry& refs,
                             std::span<const double> grid, double budget_mult, int reps,
                             double beta_f, std::uint64_t seed, int threads = 1,
                             ClusterPolicy::Orientation orientation = ClusterPolicy::Orientation::Flipped);

struct TuningRow {
  SourceSpec spec;
  TuneResult result;
};

struct SuiteResult {
  std::vector<ResultRow> rows;
  std::vector<AcceptanceRow> events;
  std::vector<AcceptanceSummaryRow> acceptance;
  std::vector<SummaryRow> summary;
  std::vector<TuningRow> tuning;
  std::vector<CorrelationInfo> correlations;
  ReferenceRegistry references;
  std::vector<TaskFailure> failures;  // cells that threw; their rows are missing
  std::size_t cells = 0;
};

using ProgressFn = std::function<void(std::size_t done, std::size_t total)>;

// Runs the full cross product (graph, method/source/param/lambda, budget,
// rep). Rows are ordered by cell regardless of scheduling; seeds derive from
// (seed, cell coordinates). `refs` may carry precomputed references.
SuiteResult run_suite(const ExperimentConfig& cfg, ReferenceRegistry refs = {},
                      const ProgressFn& progress = {});

// Writes results.csv, summary.csv, references.csv, correlations.csv and,
// when present, tuning.csv, acceptance.csv and acceptance_summary.csv.
void write_suite_outputs(const SuiteResult& result, const std::filesystem::path& dir);

}  // namespace cgca
