#pragma once

#include <cmath>
#include <vector>

#include "storage/price_table.hpp"
#include "storage/quadrature.hpp"

namespace storage {

// Implied stock x with f(x, z) = p, by bisection along x. The table is
// non-increasing in x; queries outside the tabulated price range clamp to the
// corresponding grid edge.
inline double invert_state(const PriceFunctionTable& pf, double p, double z) {
  double lo = pf.grid.x_lo(), hi = pf.grid.x_hi();
  if (p >= eval_price_function(pf, lo, z)) return lo;
  if (p <= eval_price_function(pf, hi, z)) return hi;
  const double tol = 1e-10 * (hi - lo);
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (eval_price_function(pf, mid, z) > p)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

struct PredictiveMoments {
  double mu = 0.0;       // E(p_{t+1} | p_t, z_t)
  double sigma2 = 0.0;   // Var(p_{t+1} | p_t, z_t)
  double implied_stock = 0.0;
  double implied_storage = 0.0;  // floored at zero
};

// One-step predictive mean and variance by Gauss-Hermite quadrature over the
// supply innovation. The second moment uses compensated summation; the
// variance is floored at a small positive value so downstream Gaussian
// densities stay well-defined.
inline PredictiveMoments predictive_moments(const PriceFunctionTable& pf,
                                            const StructuralParams& params,
                                            double p, double z,
                                            const QuadratureRule& quad) {
  PredictiveMoments out;
  out.implied_stock = invert_state(pf, p, z);
  out.implied_storage = std::max(out.implied_stock - inverse_demand(p, params), 0.0);

  const double carry = (1.0 - params.delta) * out.implied_storage;
  const double zc = params.rho * z;
  double m1 = 0.0, m2 = 0.0, c1 = 0.0, c2 = 0.0;
  for (std::size_t q = 0; q < quad.nodes.size(); ++q) {
    const double zn = zc + quad.nodes[q];
    const double fp = eval_price_function(pf, carry + zn, zn);
    const double w = quad.weights[q];
    // Kahan updates for both raw moments.
    double y = w * fp - c1, t = m1 + y;
    c1 = (t - m1) - y;
    m1 = t;
    y = w * fp * fp - c2;
    t = m2 + y;
    c2 = (t - m2) - y;
    m2 = t;
  }
  out.mu = m1;
  out.sigma2 = std::max(m2 - m1 * m1, 1e-12 * (1.0 + m1 * m1));
  return out;
}

inline PredictiveMoments predictive_moments(const PriceFunctionTable& pf,
                                            const StructuralParams& params,
                                            double p, double z,
                                            int quad_order = 16) {
  return predictive_moments(pf, params, p, z, gauss_hermite_nodes(quad_order));
}

}  // namespace storage
