#pragma once

#include <doctest.h>

#include <filesystem>
#include <random>
#include <string>
#include <vector>

#include "cgca/instance.hpp"
#include "cgca/rng.hpp"

namespace testing {

inline cgca::Instance single_edge(double a = 1.0) { return {2, {{0, 1, a}}}; }

inline cgca::Instance triangle(double a = 1.0) { return {3, {{0, 1, a}, {1, 2, a}, {0, 2, a}}}; }

inline cgca::Instance complete(int n, double a = 1.0) {
  std::vector<cgca::Edge> es;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) es.push_back({i, j, a});
  return {n, es};
}

inline std::vector<cgca::Spin> random_spins(int n, cgca::Rng& rng) {
  std::vector<cgca::Spin> x(static_cast<std::size_t>(n));
  for (auto& s : x) s = (rng() & 1U) ? 1 : -1;
  return x;
}

// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            ("cgca_" + tag + "_" + std::to_string(rd()));
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

}  // namespace testing
