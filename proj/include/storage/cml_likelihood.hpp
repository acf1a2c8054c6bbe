#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "storage/moments.hpp"
#include "storage/parallel.hpp"
#include "storage/price_solver.hpp"
#include "storage/simulate.hpp"
#include "storage/stats.hpp"

namespace storage {

struct CmlConfig {
  std::size_t n_i = 50000;  // subsample size
  std::size_t n_t = 32;     // thinning interval
  std::size_t n_g = 128;    // z-grid size
  double bandwidth_scale = 2.0;  // h = scale * n_i^(-1/6) * sd
  SolverConfig solver;
  int quad_order = 16;
};

struct CmlOutput {
  double loglik = -std::numeric_limits<double>::infinity();
  bool degenerate = false;  // some observation fell outside simulated support
  std::vector<double> mu_bar;      // unconditional predictive means, t = 1..T-1
  std::vector<double> sigma2_bar;  // unconditional predictive variances
};

// Kernel-weighted predictive moments on a z-grid: the weights wj are the
// (unnormalized) kernel masses pi(z_j | p_t); returns false when every weight
// vanished (observation outside the simulated support).
inline bool cml_weighted_moments(const PriceFunctionTable& pf,
                                 const StructuralParams& params, double p_t,
                                 const std::vector<double>& zgrid,
                                 const std::vector<double>& wj,
                                 const QuadratureRule& quad, double& mu_bar,
                                 double& sigma2_bar) {
  double wsum = 0.0, mu_acc = 0.0, s2_acc = 0.0;
  for (std::size_t j = 0; j < zgrid.size(); ++j) {
    if (wj[j] <= 0.0) continue;
    const PredictiveMoments m =
        predictive_moments(pf, params, p_t, zgrid[j], quad);
    wsum += wj[j];
    mu_acc += wj[j] * m.mu;
    s2_acc += wj[j] * m.sigma2;
  }
  if (wsum <= 0.0 || !std::isfinite(wsum)) return false;
  mu_bar = mu_acc / wsum;
  sigma2_bar = s2_acc / wsum;
  return true;
}

// Composite quasi log-likelihood: a long joint (p, z) simulation is thinned,
// a Gaussian-product kernel estimates pi(z_t | p_t) on a uniform z-grid, and
// the latent shock is integrated out of the predictive moments against that
// estimate.
inline CmlOutput cml_loglik_with_table(const PriceFunctionTable& pf,
                                       const StructuralParams& params,
                                       const PriceSeries& series,
                                       std::uint64_t seed,
                                       const CmlConfig& cfg = {}) {
  const auto& p = series.values;
  const std::size_t T = p.size();
  if (T < 2) throw std::invalid_argument("cml_loglik: series length < 2");
  if (cfg.n_g < 8) throw std::invalid_argument("cml_loglik: n_g < 8");

  // Step 1-2: simulate n_i * n_t joint periods, subsample every n_t-th.
  const SimulatedPath sim = simulate_dgp(params, pf, cfg.n_i * cfg.n_t, seed,
                                         {}, series.periods_per_year, cfg.quad_order);
  std::vector<double> ps(cfg.n_i), zs(cfg.n_i);
  for (std::size_t i = 0; i < cfg.n_i; ++i) {
    ps[i] = sim.prices.values[cfg.n_t * i];
    zs[i] = sim.shocks[cfg.n_t * i];
  }

  // Step 3-4: subsample moments, uniform z-grid over m_z +- 4 s_z.
  const double s_p = std::sqrt(variance(ps));
  const double m_z = mean(zs);
  const double s_z = std::sqrt(variance(zs));
  const double h_p = cfg.bandwidth_scale * std::pow(double(cfg.n_i), -1.0 / 6.0) * s_p;
  const double h_z = cfg.bandwidth_scale * std::pow(double(cfg.n_i), -1.0 / 6.0) * s_z;
  if (!(h_p > 0.0 && h_z > 0.0))
    throw std::runtime_error("cml_loglik: degenerate simulated sample");

  std::vector<double> zgrid(cfg.n_g);
  for (std::size_t j = 0; j < cfg.n_g; ++j)
    zgrid[j] = m_z - 4.0 * s_z +
               8.0 * s_z * double(j) / double(cfg.n_g - 1);

  // Step 5: separable kernel weights. The z-factor B[j,i] is shared across t;
  // the p-factor is max-shifted per observation (the shift cancels in the
  // normalization) to guard against underflow.
  std::vector<double> bmat(cfg.n_g * cfg.n_i);
  parallel_for(0, cfg.n_g, [&](std::size_t j) {
    for (std::size_t i = 0; i < cfg.n_i; ++i) {
      const double dz = (zgrid[j] - zs[i]) / h_z;
      bmat[j * cfg.n_i + i] = std::exp(-0.5 * dz * dz);
    }
  });

  const QuadratureRule quad = gauss_hermite_nodes(cfg.quad_order);
  CmlOutput out;
  out.mu_bar.assign(T - 1, 0.0);
  out.sigma2_bar.assign(T - 1, 0.0);
  std::vector<char> dead(T - 1, 0);

  parallel_for(0, T - 1, [&](std::size_t t) {
    std::vector<double> a(cfg.n_i);
    double max_e = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < cfg.n_i; ++i) {
      const double dp = (p[t] - ps[i]) / h_p;
      a[i] = -0.5 * dp * dp;
      max_e = std::max(max_e, a[i]);
    }
    // A raw p-kernel that underflows everywhere means the observation sits
    // far outside the simulated support; the shifted weights would hide that.
    if (max_e < -700.0) {
      dead[t] = 1;
      return;
    }
    for (std::size_t i = 0; i < cfg.n_i; ++i) a[i] = std::exp(a[i] - max_e);

    std::vector<double> wj(cfg.n_g);
    for (std::size_t j = 0; j < cfg.n_g; ++j) {
      const double* brow = bmat.data() + j * cfg.n_i;
      double w = 0.0;
      for (std::size_t i = 0; i < cfg.n_i; ++i) w += a[i] * brow[i];
      wj[j] = w;
    }
    if (!cml_weighted_moments(pf, params, p[t], zgrid, wj, quad, out.mu_bar[t],
                              out.sigma2_bar[t]))
      dead[t] = 1;
  });

  double ll = 0.0;
  for (std::size_t t = 0; t + 1 < T; ++t) {
    if (dead[t]) {
      out.degenerate = true;
      out.loglik = -std::numeric_limits<double>::infinity();
      return out;
    }
    const double d = p[t + 1] - out.mu_bar[t];
    ll += -0.5 * d * d / out.sigma2_bar[t] -
          0.5 * std::log(2.0 * M_PI * out.sigma2_bar[t]);
  }
  out.loglik = ll;
  return out;
}

inline CmlOutput cml_loglik(const StructuralParams& params,
                            const PriceSeries& series, std::uint64_t seed,
                            const CmlConfig& cfg = {}) {
  params.validate();
  const PriceFunctionTable pf = solve_price_function(params, cfg.solver);
  return cml_loglik_with_table(pf, params, series, seed, cfg);
}

}  // namespace storage
