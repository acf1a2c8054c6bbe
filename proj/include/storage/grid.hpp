#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "storage/params.hpp"
#include "storage/stats.hpp"

namespace storage {

struct GridConfig {
  int mz = 64;        // z grid points
  int mx1 = 128;      // fine x grid points
  int mx2 = 128;      // coarse x grid points
  double p_max = 20.0;  // price ceiling defining the lower x range
  double c = 1.5;       // upper-range safety factor
};

// Two-part (x, z) grid for the price-function solver. Construction is a
// continuous function of the parameters: no data-adaptive placement.
struct SolverGrid {
  std::vector<double> z_nodes;  // equally spaced, +-6 unconditional sd
  std::vector<double> x_nodes;  // fine grid then coarse grid, strictly increasing
  int mz = 0, mx1 = 0, mx2 = 0;
  double p_max = 0.0, c = 0.0;

  int nx() const { return mx1 + mx2; }
  double x_lo() const { return x_nodes.front(); }
  double x_hi() const { return x_nodes.back(); }
};

inline SolverGrid build_grid(const StructuralParams& p, const GridConfig& cfg = {}) {
  p.validate();
  if (p.delta <= 0.0)
    throw std::invalid_argument("build_grid: delta must be positive (upper x-range unbounded)");
  if (cfg.mz < 2 || cfg.mx1 < 2 || cfg.mx2 < 1)
    throw std::invalid_argument("build_grid: grid sizes too small");

  SolverGrid g;
  g.mz = cfg.mz;
  g.mx1 = cfg.mx1;
  g.mx2 = cfg.mx2;
  g.p_max = cfg.p_max;
  g.c = cfg.c;

  const double z_max = 6.0 / std::sqrt(1.0 - p.rho * p.rho);
  g.z_nodes.resize(cfg.mz);
  for (int j = 0; j < cfg.mz; ++j)
    g.z_nodes[j] = -z_max + 2.0 * z_max * double(j) / double(cfg.mz - 1);

  const double x1 = std::min(inverse_demand(cfg.p_max, p), g.z_nodes.front());
  const double x_fine_hi = std::max(-p.a / p.b, g.z_nodes.back());
  const double x_last = cfg.c * g.z_nodes.back() / p.delta;
  if (!(x1 < x_fine_hi && x_fine_hi < x_last))
    throw std::invalid_argument("build_grid: degenerate x-range");

  g.x_nodes.resize(cfg.mx1 + cfg.mx2);
  for (int i = 0; i < cfg.mx1; ++i)
    g.x_nodes[i] = x1 + (x_fine_hi - x1) * double(i) / double(cfg.mx1 - 1);
  for (int k = 1; k <= cfg.mx2; ++k)
    g.x_nodes[cfg.mx1 + k - 1] = x_fine_hi + (x_last - x_fine_hi) * double(k) / double(cfg.mx2);
  return g;
}

// Row-stochastic transition weights: W[j,k] proportional to N(Z_k; rho Z_j, 1).
struct WeightMatrix {
  std::vector<double> entries;  // row-major, mz x mz
  int mz = 0;
  double operator()(int j, int k) const { return entries[std::size_t(j) * mz + k]; }
};

inline WeightMatrix build_weight_matrix(const SolverGrid& grid, double rho) {
  WeightMatrix w;
  w.mz = grid.mz;
  w.entries.assign(std::size_t(grid.mz) * grid.mz, 0.0);
  for (int j = 0; j < grid.mz; ++j) {
    const double m = rho * grid.z_nodes[j];
    double row_sum = 0.0;
    for (int k = 0; k < grid.mz; ++k) {
      const double d = grid.z_nodes[k] - m;
      const double v = std::exp(-0.5 * d * d);
      w.entries[std::size_t(j) * grid.mz + k] = v;
      row_sum += v;
    }
    if (row_sum <= 0.0)
      throw std::runtime_error("build_weight_matrix: row normalizer underflow");
    for (int k = 0; k < grid.mz; ++k)
      w.entries[std::size_t(j) * grid.mz + k] /= row_sum;
  }
  return w;
}

}  // namespace storage
