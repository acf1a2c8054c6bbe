#pragma once

#include <cmath>
#include <stdexcept>
#include <vector>

#include "storage/grid.hpp"
#include "storage/parallel.hpp"
#include "storage/price_table.hpp"

namespace storage {

struct SolverConfig {
  GridConfig grid;
  int iterations = 400;
};

// Fixed-point iteration for the rational-expectations price function. A fixed
// iteration count is always performed (convergence is not an exit criterion:
// the likelihood must be a continuous function of theta). Each sweep is
// Jacobi-style double buffered, so the parallel schedule cannot affect the
// result.
inline PriceFunctionTable solve_price_function(const StructuralParams& params,
                                               const SolverConfig& cfg = {}) {
  params.validate();
  const SolverGrid grid = build_grid(params, cfg.grid);
  const WeightMatrix w = build_weight_matrix(grid, params.rho);
  const int nx = grid.nx();
  const int mz = grid.mz;
  const double beta = params.beta();
  const double one_minus_delta = 1.0 - params.delta;

  PriceFunctionTable pf;
  pf.grid = grid;
  pf.params = params;
  pf.values.resize(std::size_t(nx) * mz);

  std::vector<double> demand_at_node(nx);
  for (int i = 0; i < nx; ++i)
    demand_at_node[i] = demand_price(grid.x_nodes[i], params);

  // Initial guess f = max(P(x), 0).
  for (int j = 0; j < mz; ++j)
    for (int i = 0; i < nx; ++i)
      pf.at(i, j) = std::max(demand_at_node[i], 0.0);

  PriceFunctionTable next = pf;
  std::vector<double> sup_change(mz, 0.0);

  // Effective support of each (row-normalised Gaussian) weight row: entries
  // below 1e-14 of the row maximum contribute nothing at double precision
  // but dominate the inner-loop cost for persistent shocks.
  std::vector<int> k_lo(mz, 0), k_hi(mz, mz - 1);
  for (int j = 0; j < mz; ++j) {
    const double* wrow = w.entries.data() + j * std::size_t(mz);
    double rowmax = 0.0;
    for (int k = 0; k < mz; ++k) rowmax = std::max(rowmax, wrow[k]);
    const double cut = 1e-14 * rowmax;
    while (k_lo[j] < mz - 1 && wrow[k_lo[j]] < cut) ++k_lo[j];
    while (k_hi[j] > k_lo[j] && wrow[k_hi[j]] < cut) --k_hi[j];
  }

  for (int sweep = 0; sweep < cfg.iterations; ++sweep) {
    parallel_for(0, std::size_t(mz), [&](std::size_t j) {
      const double* wrow = w.entries.data() + j * std::size_t(mz);
      double local_sup = 0.0;
      for (int i = 0; i < nx; ++i) {
        const double f_ij = pf.at(i, int(j));
        const double carry =
            one_minus_delta * (grid.x_nodes[i] - inverse_demand(f_ij, params));
        double g = 0.0;
        for (int k = k_lo[j]; k <= k_hi[j]; ++k)
          g += wrow[k] * detail::interp_x_at_znode(pf, k, grid.z_nodes[k] + carry);
        g *= beta;
        if (!std::isfinite(g))
          throw std::runtime_error("solve_price_function: non-finite iterate");
        const double v = std::max(demand_at_node[i], g);
        next.at(i, int(j)) = v;
        local_sup = std::max(local_sup, std::fabs(v - f_ij));
      }
      sup_change[j] = local_sup;
    });
    pf.values.swap(next.values);
    if (sweep == cfg.iterations - 1) {
      double s = 0.0;
      for (double v : sup_change) s = std::max(s, v);
      pf.final_sup_change = s;
    }
  }
  pf.iterations = cfg.iterations;
  return pf;
}

}  // namespace storage
