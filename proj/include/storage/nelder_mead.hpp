#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

namespace storage {

struct NelderMeadOptions {
  double f_tol = 1e-6;          // simplex function-value spread
  double x_tol = 1e-6;          // simplex diameter
  int max_evaluations = 2000;
  double initial_step = 0.05;   // per-coordinate simplex offset
};

struct NelderMeadResult {
  std::vector<double> x;
  double value = -std::numeric_limits<double>::infinity();
  int evaluations = 0;
  int iterations = 0;
  double simplex_diameter = std::numeric_limits<double>::infinity();
  bool converged = false;  // false when the evaluation budget ran out
};

// Standard Nelder-Mead maximization (reflection 1, expansion 2, contraction
// 1/2, shrink 1/2). The objective is expected to be finite at the start.
inline NelderMeadResult nelder_mead_maximize(
    const std::function<double(const std::vector<double>&)>& objective,
    const std::vector<double>& start, const NelderMeadOptions& opt = {}) {
  const std::size_t n = start.size();
  if (n == 0) throw std::invalid_argument("nelder_mead_maximize: empty start");

  NelderMeadResult res;
  const auto eval = [&](const std::vector<double>& x) {
    ++res.evaluations;
    const double v = objective(x);
    return std::isfinite(v) ? v : -std::numeric_limits<double>::infinity();
  };

  std::vector<std::vector<double>> simplex(n + 1, start);
  std::vector<double> values(n + 1);
  values[0] = eval(start);
  if (!std::isfinite(values[0]))
    throw std::invalid_argument("nelder_mead_maximize: objective not finite at start");
  for (std::size_t i = 0; i < n; ++i) {
    simplex[i + 1][i] += opt.initial_step;
    values[i + 1] = eval(simplex[i + 1]);
  }

  const auto diameter = [&]() {
    double d = 0.0;
    for (std::size_t i = 1; i <= n; ++i)
      for (std::size_t k = 0; k < n; ++k)
        d = std::max(d, std::fabs(simplex[i][k] - simplex[0][k]));
    return d;
  };

  std::vector<std::size_t> order(n + 1);
  while (res.evaluations < opt.max_evaluations) {
    ++res.iterations;
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
    // Reorder so index 0 is best, n is worst.
    {
      std::vector<std::vector<double>> s2(n + 1);
      std::vector<double> v2(n + 1);
      for (std::size_t i = 0; i <= n; ++i) {
        s2[i] = simplex[order[i]];
        v2[i] = values[order[i]];
      }
      simplex.swap(s2);
      values.swap(v2);
    }

    res.simplex_diameter = diameter();
    const double spread = values[0] - values[n];
    if (spread < opt.f_tol && res.simplex_diameter < opt.x_tol) {
      res.converged = true;
      break;
    }

    // Centroid of all but the worst vertex.
    std::vector<double> centroid(n, 0.0);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t k = 0; k < n; ++k) centroid[k] += simplex[i][k] / double(n);

    const auto blend = [&](double coef) {
      std::vector<double> x(n);
      for (std::size_t k = 0; k < n; ++k)
        x[k] = centroid[k] + coef * (simplex[n][k] - centroid[k]);
      return x;
    };

    const std::vector<double> reflected = blend(-1.0);
    const double fr = eval(reflected);
    if (fr > values[0]) {
      const std::vector<double> expanded = blend(-2.0);
      const double fe = eval(expanded);
      if (fe > fr) {
        simplex[n] = expanded;
        values[n] = fe;
      } else {
        simplex[n] = reflected;
        values[n] = fr;
      }
    } else if (fr > values[n - 1]) {
      simplex[n] = reflected;
      values[n] = fr;
    } else {
      // Contract toward the better of (worst, reflected).
      const bool outside = fr > values[n];
      const std::vector<double> contracted = blend(outside ? -0.5 : 0.5);
      const double fc = eval(contracted);
      if (fc > (outside ? fr : values[n])) {
        simplex[n] = contracted;
        values[n] = fc;
      } else {
        // Shrink toward the best vertex.
        for (std::size_t i = 1; i <= n; ++i) {
          for (std::size_t k = 0; k < n; ++k)
            simplex[i][k] = simplex[0][k] + 0.5 * (simplex[i][k] - simplex[0][k]);
          values[i] = eval(simplex[i]);
        }
      }
    }
  }

  std::size_t best = 0;
  for (std::size_t i = 1; i <= n; ++i)
    if (values[i] > values[best]) best = i;
  res.x = simplex[best];
  res.value = values[best];
  res.simplex_diameter = diameter();
  return res;
}

}  // namespace storage
