#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <ostream>
#include <vector>

#include "storage/grid.hpp"
#include "storage/params.hpp"

namespace storage {

// Tabulated solution of the price-function fixed point on the two-part grid,
// with bilinear evaluation off the grid. Queries outside the grid are clamped
// to the nearest edge coordinate, which keeps the evaluation bounded and
// continuous.
struct PriceFunctionTable {
  SolverGrid grid;
  StructuralParams params;               // the theta the table was solved at
  std::vector<double> values;            // z-major: values[j * nx + i]
  int iterations = 0;                    // sweeps performed
  double final_sup_change = std::numeric_limits<double>::quiet_NaN();

  double at(int i, int j) const { return values[std::size_t(j) * grid.nx() + i]; }
  double& at(int i, int j) { return values[std::size_t(j) * grid.nx() + i]; }
};

namespace detail {

// Locate x in the two-part grid: returns (i, fraction) with x between nodes
// i and i+1. Clamps to the edges.
struct GridPos {
  int i;
  double frac;
};

inline GridPos locate_x(const SolverGrid& g, double x) {
  const int nx = g.nx();
  if (x <= g.x_nodes.front()) return {0, 0.0};
  if (x >= g.x_nodes.back()) return {nx - 2, 1.0};
  const double fine_hi = g.x_nodes[g.mx1 - 1];
  int i;
  if (x < fine_hi) {
    const double dx = (fine_hi - g.x_nodes.front()) / double(g.mx1 - 1);
    i = int((x - g.x_nodes.front()) / dx);
    i = std::min(i, g.mx1 - 2);
  } else {
    const double dx = (g.x_nodes.back() - fine_hi) / double(g.mx2);
    i = g.mx1 - 1 + int((x - fine_hi) / dx);
    i = std::min(i, nx - 2);
  }
  // Guard against rounding at segment boundaries.
  while (i > 0 && x < g.x_nodes[i]) --i;
  while (i < nx - 2 && x > g.x_nodes[i + 1]) ++i;
  const double frac = (x - g.x_nodes[i]) / (g.x_nodes[i + 1] - g.x_nodes[i]);
  return {i, std::clamp(frac, 0.0, 1.0)};
}

inline GridPos locate_z(const SolverGrid& g, double z) {
  if (z <= g.z_nodes.front()) return {0, 0.0};
  if (z >= g.z_nodes.back()) return {g.mz - 2, 1.0};
  const double dz = (g.z_nodes.back() - g.z_nodes.front()) / double(g.mz - 1);
  int j = std::min(int((z - g.z_nodes.front()) / dz), g.mz - 2);
  while (j > 0 && z < g.z_nodes[j]) --j;
  while (j < g.mz - 2 && z > g.z_nodes[j + 1]) ++j;
  const double frac = (z - g.z_nodes[j]) / (g.z_nodes[j + 1] - g.z_nodes[j]);
  return {j, std::clamp(frac, 0.0, 1.0)};
}

// Linear interpolation along x within the z-node column k (contiguous row).
inline double interp_x_at_znode(const PriceFunctionTable& pf, int k, double x) {
  const GridPos p = locate_x(pf.grid, x);
  const double* row = pf.values.data() + std::size_t(k) * pf.grid.nx();
  return row[p.i] + p.frac * (row[p.i + 1] - row[p.i]);
}

}  // namespace detail

inline double eval_price_function(const PriceFunctionTable& pf, double x, double z) {
  const detail::GridPos px = detail::locate_x(pf.grid, x);
  const detail::GridPos pz = detail::locate_z(pf.grid, z);
  const double f00 = pf.at(px.i, pz.i);
  const double f10 = pf.at(px.i + 1, pz.i);
  const double f01 = pf.at(px.i, pz.i + 1);
  const double f11 = pf.at(px.i + 1, pz.i + 1);
  const double lo = f00 + px.frac * (f10 - f00);
  const double hi = f01 + px.frac * (f11 - f01);
  return lo + pz.frac * (hi - lo);
}

// Threshold price p*(z) = P(x*(z)), where x*(z) is the largest grid x with
// f(x,z) <= P(x) + tol. Prices at or above p*(z) indicate stock-out. Returns
// +inf if storage is active over the whole grid.
inline double threshold_price(const PriceFunctionTable& pf, double z) {
  const int nx = pf.grid.nx();
  const auto in_stockout = [&](int i) {
    const double px = demand_price(pf.grid.x_nodes[i], pf.params);
    const double tol = 1e-8 * (1.0 + std::fabs(px));
    return eval_price_function(pf, pf.grid.x_nodes[i], z) <= px + tol;
  };
  if (!in_stockout(0)) return std::numeric_limits<double>::infinity();
  // The stockout indicator is monotone along x (true up to the kink node),
  // so the boundary node can be found by bisection.
  int lo = 0, hi = nx - 1;
  if (in_stockout(hi)) return demand_price(pf.grid.x_nodes[hi], pf.params);
  while (hi - lo > 1) {
    const int mid = (lo + hi) / 2;
    (in_stockout(mid) ? lo : hi) = mid;
  }
  return demand_price(pf.grid.x_nodes[lo], pf.params);
}

// CSV dump: header rows with grid sizes and theta, then row-major (x-major)
// table values.
inline void dump_price_table(const PriceFunctionTable& pf, std::ostream& os) {
  os << "mz,mx1,mx2,rho,a,b,delta,r,iterations,final_sup_change\n";
  os.precision(17);
  os << pf.grid.mz << ',' << pf.grid.mx1 << ',' << pf.grid.mx2 << ','
     << pf.params.rho << ',' << pf.params.a << ',' << pf.params.b << ','
     << pf.params.delta << ',' << pf.params.r << ',' << pf.iterations << ','
     << pf.final_sup_change << '\n';
  os << "x";
  for (int j = 0; j < pf.grid.mz; ++j) os << ",z" << j;
  os << '\n';
  for (int i = 0; i < pf.grid.nx(); ++i) {
    os << pf.grid.x_nodes[i];
    for (int j = 0; j < pf.grid.mz; ++j) os << ',' << pf.at(i, j);
    os << '\n';
  }
}

}  // namespace storage
