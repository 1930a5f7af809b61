#include "cgca/correlation.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "cgca/error.hpp"
#include "cgca/text.hpp"

namespace cgca {

std::string to_string(CorrelationSource s) {
  switch (s) {
    case CorrelationSource::CC: return "CC";
    case CorrelationSource::Random: return "RANDOM";
    case CorrelationSource::MC: return "MC";
    case CorrelationSource::SDP: return "SDP";
    case CorrelationSource::QAOA: return "QAOA";
  }
  return "?";
}

CorrelationSource parse_correlation_source(const std::string& s) {
  if (s == "CC") return CorrelationSource::CC;
  if (s == "RANDOM") return CorrelationSource::Random;
  if (s == "MC") return CorrelationSource::MC;
  if (s == "SDP") return CorrelationSource::SDP;
  if (s == "QAOA") return CorrelationSource::QAOA;
  throw InvalidParameter("unknown correlation source '" + s + "'");
}

CorrelationMatrix::CorrelationMatrix(int n, std::vector<double> values,
                                     CorrelationSource source, double param)
    : n_(n), values_(std::move(values)), source_(source), param_(param) {
  const auto un = static_cast<std::size_t>(n);
  if (n < 0 || values_.size() != un * un) {
    throw InvalidParameter("correlation matrix must have n*n entries");
  }
  for (std::size_t i = 0; i < un; ++i) {
    values_[i * un + i] = 1.0;
    for (std::size_t j = i + 1; j < un; ++j) {
      double& a = values_[i * un + j];
      double& b = values_[j * un + i];
      if (!std::isfinite(a) || a != b) {
        throw InvalidParameter("correlation matrix must be finite and symmetric at (" +
                               std::to_string(i) + "," + std::to_string(j) + ")");
      }
      if (std::abs(a) > 1.0 + kClipTolerance) {
        throw InvalidParameter("correlation " + std::to_string(a) + " outside [-1,1]");
      }
      a = std::clamp(a, -1.0, 1.0);
      b = a;
    }
  }
  mean_abs_nonzero_ = recompute_mean_abs_nonzero();
}

double CorrelationMatrix::recompute_mean_abs_nonzero() const {
  const auto un = static_cast<std::size_t>(n_);
  double sum = 0.0;
  std::size_t count = 0;
  for (std::size_t i = 0; i < un; ++i) {
    for (std::size_t j = i + 1; j < un; ++j) {
      const double z = values_[i * un + j];
      if (z != 0.0) {
        sum += std::abs(z);
        ++count;
      }
    }
  }
  return count == 0 ? 0.0 : sum / static_cast<double>(count);
}

void write_correlations(const CorrelationMatrix& z, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << z.n() << ' ' << to_string(z.source()) << ' ' << text::format_double(z.param()) << '\n';
  for (Vertex i = 0; i < z.n(); ++i) {
    for (Vertex j = i + 1; j < z.n(); ++j) {
      if (z(i, j) != 0.0) out << i << ' ' << j << ' ' << text::format_double(z(i, j)) << '\n';
    }
  }
  if (!out) throw Error("write failed for " + path.string());
}

CorrelationMatrix read_correlations(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string(), 0);
  std::string raw;
  std::size_t line = 0;
  int n = -1;
  CorrelationSource source{};
  double param = 0.0;
  std::vector<double> values;
  while (std::getline(in, raw)) {
    ++line;
    auto toks = text::split_ws(raw);
    if (toks.empty() || toks[0].front() == '#') continue;
    if (n < 0) {
      if (toks.size() != 3) throw ParseError("header must be 'n source param'", line);
      n = text::parse_number<int>(toks[0], line, "n");
      if (n < 0) throw ParseError("negative n", line);
      try {
        source = parse_correlation_source(std::string(toks[1]));
      } catch (const InvalidParameter& e) {
        throw ParseError(e.what(), line);
      }
      param = text::parse_number<double>(toks[2], line, "param");
      values.assign(static_cast<std::size_t>(n) * static_cast<std::size_t>(n), 0.0);
      continue;
    }
    if (toks.size() != 3) throw ParseError("entry must be 'i j z'", line);
    const int i = text::parse_number<int>(toks[0], line, "index");
    const int j = text::parse_number<int>(toks[1], line, "index");
    const double z = text::parse_number<double>(toks[2], line, "value");
    if (i < 0 || j < 0 || i >= n || j >= n || i == j) throw ParseError("bad index pair", line);
    values[static_cast<std::size_t>(i) * n + j] = z;
    values[static_cast<std::size_t>(j) * n + i] = z;
  }
  if (n < 0) throw ParseError("missing header", line);
  try {
    return CorrelationMatrix(n, std::move(values), source, param);
  } catch (const InvalidParameter& e) {
    throw ParseError(e.what(), 0);
  }
}

void score_samples(const Instance& inst, SampleSet& samples, double reference_cut,
                   bool certified) {
  if (samples.bitstrings.empty()) throw InvalidParameter("empty sample set");
  if (reference_cut == 0.0) throw InvalidParameter("reference cut must be nonzero");
  double num = 0.0;
  double den = 0.0;
  for (std::size_t s = 0; s < samples.bitstrings.size(); ++s) {
    const double w = samples.weights.empty() ? 1.0 : samples.weights[s];
    num += w * max_cut_value(inst, samples.bitstrings[s].x);
    den += w;
  }
  samples.mean_approx_ratio = num / den / reference_cut;
  samples.reference_certified = certified;
}

void write_samples(const SampleSet& s, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << s.n << ' ' << s.bitstrings.size() << ' ' << text::format_double(s.beta_s) << ' '
      << text::format_double(s.mean_approx_ratio) << '\n';
  std::string line;
  for (std::size_t k = 0; k < s.bitstrings.size(); ++k) {
    line.clear();
    for (Spin v : s.bitstrings[k].x) line.push_back(v > 0 ? '+' : '-');
    out << line;
    if (!s.weights.empty()) out << ' ' << text::format_double(s.weights[k]);
    out << '\n';
  }
  if (!out) throw Error("write failed for " + path.string());
}

SampleSet read_samples(const Instance& inst, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("cannot open " + path.string(), 0);
  SampleSet s;
  std::string raw;
  std::size_t line = 0;
  bool have_header = false;
  std::size_t count = 0;
  while (std::getline(in, raw)) {
    ++line;
    auto toks = text::split_ws(raw);
    if (toks.empty() || toks[0].front() == '#') continue;
    if (!have_header) {
      if (toks.size() != 4) throw ParseError("header must be 'n count beta_s ratio'", line);
      s.n = text::parse_number<int>(toks[0], line, "n");
      count = text::parse_number<std::size_t>(toks[1], line, "count");
      s.beta_s = text::parse_number<double>(toks[2], line, "beta_s");
      // from_chars does not accept "nan" in every libstdc++ release.
      s.mean_approx_ratio = toks[3] == "nan"
                                ? std::numeric_limits<double>::quiet_NaN()
                                : text::parse_number<double>(toks[3], line, "ratio");
      if (s.n != inst.n()) throw ParseError("sample length does not match instance", line);
      have_header = true;
      continue;
    }
    if (toks[0].size() != static_cast<std::size_t>(s.n) || toks.size() > 2) {
      throw ParseError("bitstring must have n characters", line);
    }
    std::vector<Spin> x;
    x.reserve(toks[0].size());
    for (char c : toks[0]) {
      if (c != '+' && c != '-') throw ParseError("bitstring characters must be '+' or '-'", line);
      x.push_back(c == '+' ? Spin{1} : Spin{-1});
    }
    if (toks.size() == 2) s.weights.push_back(text::parse_number<double>(toks[1], line, "weight"));
    s.bitstrings.push_back(make_config(inst, std::move(x)));
  }
  if (!have_header) throw ParseError("missing header", line);
  if (s.bitstrings.size() != count) throw ParseError("sample count mismatch", line);
  if (!s.weights.empty() && s.weights.size() != s.bitstrings.size()) {
    throw ParseError("either every sample or none carries a weight", line);
  }
  return s;
}

}  // namespace cgca
