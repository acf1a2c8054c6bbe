#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

namespace storage {

struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};

// Gauss-Hermite nodes and weights, pre-transformed for standard-normal
// expectations: sum_i w_i g(n_i) ~ integral of g(e) dPhi(e). Roots found by
// Newton iteration on the physicists' Hermite recurrence.
inline QuadratureRule gauss_hermite_nodes(int order) {
  if (order < 2 || order > 64)
    throw std::invalid_argument("gauss_hermite_nodes: order must be in [2, 64]");

  const int n = order;
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.weights.resize(n);
  const double pim4 = 0.7511255444649425;  // pi^(-1/4)

  const int m = (n + 1) / 2;
  double z = 0.0;
  for (int i = 0; i < m; ++i) {
    // Initial guesses from Numerical Recipes.
    if (i == 0)
      z = std::sqrt(2.0 * n + 1.0) - 1.85575 * std::pow(2.0 * n + 1.0, -1.0 / 6.0);
    else if (i == 1)
      z -= 1.14 * std::pow(double(n), 0.426) / z;
    else if (i == 2)
      z = 1.86 * z - 0.86 * rule.nodes[0];
    else if (i == 3)
      z = 1.91 * z - 0.91 * rule.nodes[1];
    else
      z = 2.0 * z - rule.nodes[i - 2];

    double pp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = pim4, p2 = 0.0;
      for (int k = 0; k < n; ++k) {
        const double p3 = p2;
        p2 = p1;
        p1 = z * std::sqrt(2.0 / (k + 1.0)) * p2 -
             std::sqrt(double(k) / (k + 1.0)) * p3;
      }
      pp = std::sqrt(2.0 * n) * p2;
      const double z1 = z;
      z = z1 - p1 / pp;
      if (std::fabs(z - z1) < 1e-15) break;
    }
    // Store descending from the largest root; mirror below.
    rule.nodes[i] = z;
    rule.weights[i] = 2.0 / (pp * pp);
  }
  // Fill the mirrored half and convert to the probabilists' scaling.
  std::vector<double> x(n), w(n);
  for (int i = 0; i < m; ++i) {
    x[i] = -rule.nodes[i] * std::sqrt(2.0);
    x[n - 1 - i] = rule.nodes[i] * std::sqrt(2.0);
    const double wi = rule.weights[i] / std::sqrt(M_PI);
    w[i] = wi;
    w[n - 1 - i] = wi;
  }
  // For odd order the middle node is exactly zero.
  if (n % 2 == 1) x[m - 1] = 0.0;
  rule.nodes = std::move(x);
  rule.weights = std::move(w);
  return rule;
}

}  // namespace storage
