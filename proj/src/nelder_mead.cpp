#include "cgca/nelder_mead.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "cgca/error.hpp"

namespace cgca {

NelderMeadResult nelder_mead(const std::function<double(std::span<const double>)>& f,
                             std::vector<double> x0, const NelderMeadOptions& opts) {
  const std::size_t dim = x0.size();
  if (dim == 0) throw InvalidParameter("nelder_mead: empty parameter vector");

  NelderMeadResult res;
  auto eval = [&](const std::vector<double>& x) {
    ++res.evaluations;
    return f(x);
  };

  std::vector<std::vector<double>> simplex(dim + 1, x0);
  for (std::size_t k = 0; k < dim; ++k) simplex[k + 1][k] += opts.initial_step;
  std::vector<double> values(dim + 1);
  for (std::size_t k = 0; k <= dim; ++k) values[k] = eval(simplex[k]);

  std::vector<std::size_t> order(dim + 1);
  std::vector<double> centroid(dim);
  std::vector<double> trial(dim);
  std::vector<double> trial2(dim);

  auto along = [&](double t, std::vector<double>& out) {
    const auto& worst = simplex[order.back()];
    for (std::size_t k = 0; k < dim; ++k) out[k] = centroid[k] + t * (worst[k] - centroid[k]);
  };

  for (res.iterations = 0;; ++res.iterations) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second_worst = order[dim - 1];

    double diameter = 0.0;
    for (std::size_t k = 1; k <= dim; ++k) {
      for (std::size_t c = 0; c < dim; ++c) {
        diameter = std::max(diameter, std::abs(simplex[order[k]][c] - simplex[best][c]));
      }
    }
    if (values[worst] - values[best] <= opts.f_tol && diameter <= opts.x_tol) break;
    if (res.iterations >= opts.max_iterations) {
      res.hit_iteration_limit = true;
      break;
    }

    std::fill(centroid.begin(), centroid.end(), 0.0);
    for (std::size_t k = 0; k < dim; ++k) {
      for (std::size_t c = 0; c < dim; ++c) centroid[c] += simplex[order[k]][c];
    }
    for (double& c : centroid) c /= static_cast<double>(dim);

    along(-1.0, trial);
    const double reflected = eval(trial);
    if (reflected < values[best]) {
      along(-2.0, trial2);
      const double expanded = eval(trial2);
      if (expanded < reflected) {
        simplex[worst] = trial2;
        values[worst] = expanded;
      } else {
        simplex[worst] = trial;
        values[worst] = reflected;
      }
      continue;
    }
    if (reflected < values[second_worst]) {
      simplex[worst] = trial;
      values[worst] = reflected;
      continue;
    }
    // Contraction, outside or inside depending on the reflected value.
    const bool outside = reflected < values[worst];
    along(outside ? -0.5 : 0.5, trial2);
    const double contracted = eval(trial2);
    if (contracted < (outside ? reflected : values[worst])) {
      simplex[worst] = trial2;
      values[worst] = contracted;
      continue;
    }
    for (std::size_t k = 1; k <= dim; ++k) {
      auto& x = simplex[order[k]];
      for (std::size_t c = 0; c < dim; ++c) x[c] = simplex[best][c] + 0.5 * (x[c] - simplex[best][c]);
      values[order[k]] = eval(x);
    }
  }

  const auto best = static_cast<std::size_t>(
      std::min_element(values.begin(), values.end()) - values.begin());
  res.x = simplex[best];
  res.value = values[best];
  return res;
}

}  // namespace cgca
