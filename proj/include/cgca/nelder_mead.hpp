#pragma once

#include <functional>
#include <span>
#include <vector>

namespace cgca {

struct NelderMeadOptions {
  int max_iterations = 1000;
  double initial_step = 0.1;
  double f_tol = 1e-10;  // stop when the simplex value spread falls below
  double x_tol = 1e-8;   // ... and its diameter falls below this
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = 0.0;
  int iterations = 0;
  std::size_t evaluations = 0;
  bool hit_iteration_limit = false;
};

// Derivative-free downhill simplex minimization with the standard
// reflection/expansion/contraction/shrink coefficients (1, 2, 1/2, 1/2).
NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& f,
                             std::vector<double> x0, const NelderMeadOptions& opts = {});

}  // namespace cgca
