#pragma once

#include <filesystem>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "cgca/instance.hpp"

namespace cgca {

enum class CorrelationSource { CC, Random, MC, SDP, QAOA };

std::string to_string(CorrelationSource s);
CorrelationSource parse_correlation_source(const std::string& s);

// Symmetric n x n two-point correlations with values in [-1, 1], tagged with
// where they came from. `param` is beta_s for MC, the depth p for QAOA and 0
// otherwise. The diagonal is 1 by convention and never consulted.
class CorrelationMatrix {
 public:
  static constexpr double kClipTolerance = 1e-9;

  CorrelationMatrix() = default;

  // `values` is row-major n*n. Entries within kClipTolerance outside [-1, 1]
  // are clipped; anything further out, or an asymmetric input, throws
  // InvalidParameter.
  CorrelationMatrix(int n, std::vector<double> values, CorrelationSource source,
                    double param = 0.0);

  int n() const noexcept { return n_; }
  CorrelationSource source() const noexcept { return source_; }
  double param() const noexcept { return param_; }

  double operator()(Vertex i, Vertex j) const {
    return values_[static_cast<std::size_t>(i) * static_cast<std::size_t>(n_) +
                   static_cast<std::size_t>(j)];
  }
  const std::vector<double>& values() const noexcept { return values_; }

  // E[|Z_ij| | Z_ij != 0, i != j]; 0 when every off-diagonal entry is 0.
  double mean_abs_nonzero() const noexcept { return mean_abs_nonzero_; }
  double recompute_mean_abs_nonzero() const;

 private:
  int n_ = 0;
  std::vector<double> values_;
  CorrelationSource source_ = CorrelationSource::CC;
  double param_ = 0.0;
  double mean_abs_nonzero_ = 0.0;
};

// Header "n SOURCE param", then "i j z" for every nonzero pair i < j.
void write_correlations(const CorrelationMatrix& z, const std::filesystem::path& path);
CorrelationMatrix read_correlations(const std::filesystem::path& path);

// Bitstrings drawn from some distribution. `weights` is empty for plain
// samples; otherwise it holds one nonnegative weight per bitstring.
struct SampleSet {
  int n = 0;
  std::vector<SpinConfig> bitstrings;
  std::vector<double> weights;
  double beta_s = 0.0;
  // Mean C(x) / C(x_opt); NaN when no reference cut was available.
  double mean_approx_ratio = std::numeric_limits<double>::quiet_NaN();
  bool reference_certified = false;

  // Filled by the Metropolis sampler.
  double mean_magnetization = 0.0;
  bool equilibration_warning = false;
  double acceptance_rate = std::numeric_limits<double>::quiet_NaN();
};

// Sets mean_approx_ratio against `reference_cut`.
void score_samples(const Instance& inst, SampleSet& samples, double reference_cut,
                   bool certified);

// Header "n count beta_s mean_approx_ratio", then one '+'/'-' string per
// line, optionally followed by a weight.
void write_samples(const SampleSet& s, const std::filesystem::path& path);
SampleSet read_samples(const Instance& inst, const std::filesystem::path& path);

}  // namespace cgca
