#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "storage/moments.hpp"
#include "storage/parallel.hpp"
#include "storage/params.hpp"
#include "storage/price_solver.hpp"
#include "storage/resampler.hpp"
#include "storage/rng.hpp"
#include "storage/stats.hpp"

namespace storage {

struct FilterConfig {
  std::size_t n_particles = 4096;
  SolverConfig solver;
  int quad_order = 16;
  std::size_t resample_grid_size = 1024;
};

struct FilterOutput {
  double loglik = -std::numeric_limits<double>::infinity();
  bool degenerate = false;  // a step where all weights underflowed
  std::vector<double> step_logliks;          // log L_t, t = 1..T-1
  std::vector<double> residuals_u;           // u_t, t = 2..T
  std::vector<double> stockout_probability;  // per period, t = 1..T
  std::vector<double> implied_storage;       // weighted median per period
};

// Continuous SIR particle filter for the simulated log-likelihood. All
// randomness derives from the seed: the init draw uses one stream and each
// resampling step its own, so likelihood evaluations at different theta reuse
// the same underlying uniforms (common random numbers).
inline FilterOutput pf_loglik_with_table(const PriceFunctionTable& pf,
                                         const StructuralParams& params,
                                         const PriceSeries& series,
                                         std::uint64_t seed,
                                         const FilterConfig& cfg = {}) {
  const auto& p = series.values;
  const std::size_t T = p.size();
  if (T < 2) throw std::invalid_argument("pf_loglik: series length < 2");
  const std::size_t N = cfg.n_particles;
  const QuadratureRule quad = gauss_hermite_nodes(cfg.quad_order);

  // Kink threshold evaluated per particle for the filtered stock-out
  // probability (exact for the interpolated table; see threshold_price).
  const auto threshold_at = [&](double z) { return threshold_price(pf, z); };

  // Initialization from the stationary shock law.
  std::vector<double> z(N);
  {
    Rng init_rng(seed, 0x1000);
    const double sd = 1.0 / std::sqrt(1.0 - params.rho * params.rho);
    for (auto& zj : z) zj = sd * init_rng.normal();
  }

  FilterOutput out;
  out.loglik = 0.0;
  out.step_logliks.reserve(T - 1);
  out.residuals_u.reserve(T - 1);
  out.stockout_probability.reserve(T);
  out.implied_storage.reserve(T);

  std::vector<double> log_w(N), mu(N), sig2(N), storage_j(N), weights(N);

  for (std::size_t t = 0; t + 1 < T; ++t) {
    // Per-particle predictive moments and log-weights (data-parallel, each
    // index writes only its own slots).
    parallel_for(0, N, [&](std::size_t j) {
      const PredictiveMoments m = predictive_moments(pf, params, p[t], z[j], quad);
      mu[j] = m.mu;
      sig2[j] = m.sigma2;
      storage_j[j] = m.implied_storage;
      log_w[j] = log_norm_pdf(p[t + 1], m.mu, m.sigma2);
    });

    // Cloud diagnostics at time t (equally weighted: z ~ pi(z_t | p_1..p_t)).
    {
      std::size_t hits = 0;
      for (std::size_t j = 0; j < N; ++j)
        if (p[t] >= threshold_at(z[j])) ++hits;
      out.stockout_probability.push_back(double(hits) / double(N));
      std::vector<double> eq(N, 1.0 / double(N));
      out.implied_storage.push_back(weighted_median(storage_j, eq));
    }

    // Log-sum-exp step likelihood: L_t = mean of raw weights.
    double max_lw = -std::numeric_limits<double>::infinity();
    for (double lw : log_w) max_lw = std::max(max_lw, lw);
    // max_lw below roughly -700 means every raw density underflows to zero:
    // the observation is unexplainable at this theta.
    if (!std::isfinite(max_lw) || max_lw < -700.0) {
      out.degenerate = true;
      out.loglik = -std::numeric_limits<double>::infinity();
      return out;
    }
    double sum_w = 0.0;
    for (std::size_t j = 0; j < N; ++j) {
      weights[j] = std::exp(log_w[j] - max_lw);
      sum_w += weights[j];
    }
    if (sum_w <= 0.0 || !std::isfinite(sum_w)) {
      out.degenerate = true;
      out.loglik = -std::numeric_limits<double>::infinity();
      return out;
    }
    const double log_L = max_lw + std::log(sum_w / double(N));
    out.step_logliks.push_back(log_L);
    out.loglik += log_L;

    // Generalized residual for p_{t+1}.
    double u = 0.0;
    for (std::size_t j = 0; j < N; ++j) u += norm_cdf(p[t + 1], mu[j], sig2[j]);
    out.residuals_u.push_back(u / double(N));

    // Advance: continuous resampling from the predictive shock mixture
    // sum_k w*_k N(.; rho z_k, 1). No extra simulation step is needed.
    MixtureSpec mix;
    mix.means.resize(N);
    mix.weights.resize(N);
    for (std::size_t j = 0; j < N; ++j) {
      mix.means[j] = params.rho * z[j];
      mix.weights[j] = weights[j] / sum_w;
    }
    mix.variance = 1.0;
    Rng step_rng(seed, 0x2000 + t);
    z = resample_mixture(mix, N, step_rng, cfg.resample_grid_size);
  }

  // Final-period diagnostics from the cloud z ~ pi(z_T | p_1..p_T).
  {
    std::size_t hits = 0;
    for (std::size_t j = 0; j < N; ++j) {
      const PredictiveMoments m =
          predictive_moments(pf, params, p[T - 1], z[j], quad);
      storage_j[j] = m.implied_storage;
      if (p[T - 1] >= threshold_at(z[j])) ++hits;
    }
    out.stockout_probability.push_back(double(hits) / double(N));
    std::vector<double> eq(N, 1.0 / double(N));
    out.implied_storage.push_back(weighted_median(storage_j, eq));
  }
  return out;
}

inline FilterOutput pf_loglik(const StructuralParams& params,
                              const PriceSeries& series, std::uint64_t seed,
                              const FilterConfig& cfg = {}) {
  params.validate();
  const PriceFunctionTable pf = solve_price_function(params, cfg.solver);
  return pf_loglik_with_table(pf, params, series, seed, cfg);
}

// Transformed generalized residuals eta_t = Phi^-1(u_t), with u clipped away
// from {0, 1} so the inversion stays finite.
inline std::vector<double> generalized_residuals(const FilterOutput& out) {
  std::vector<double> eta;
  eta.reserve(out.residuals_u.size());
  for (double u : out.residuals_u)
    eta.push_back(norm_ppf(std::clamp(u, 1e-12, 1.0 - 1e-12)));
  return eta;
}

struct DiagnosticsReport {
  double mean = 0.0, sd = 0.0, skewness = 0.0, excess_kurtosis = 0.0, ac1 = 0.0;
  double jarque_bera_p = std::numeric_limits<double>::quiet_NaN();
  double ks_normal_p = std::numeric_limits<double>::quiet_NaN();
  double ljung_box_p = std::numeric_limits<double>::quiet_NaN();
  double arch_p = std::numeric_limits<double>::quiet_NaN();
  bool degenerate = false;
};

// Residual battery: Jarque-Bera, KS vs N(0,1), Ljung-Box (lag 20), Engle
// ARCH LM test (first-order).
inline DiagnosticsReport residual_diagnostics(const std::vector<double>& eta,
                                              int lb_lags = 20) {
  if (eta.size() < 30)
    throw std::invalid_argument("residual_diagnostics: length < 30");
  const std::size_t n = eta.size();
  DiagnosticsReport rep;
  rep.mean = mean(eta);
  const double var = variance(eta);
  rep.sd = var > 0.0 ? std::sqrt(var) : 0.0;
  if (var <= 0.0) {
    rep.degenerate = true;
    return rep;
  }
  rep.skewness = skewness(eta);
  rep.excess_kurtosis = kurtosis(eta) - 3.0;
  rep.ac1 = autocorrelation(eta, 1);

  const double jb = double(n) * (rep.skewness * rep.skewness / 6.0 +
                                 rep.excess_kurtosis * rep.excess_kurtosis / 24.0);
  rep.jarque_bera_p = chi2_sf(jb, 2.0);
  rep.ks_normal_p = ks_test_normal_pvalue(eta);

  double q = 0.0;
  for (int k = 1; k <= lb_lags; ++k) {
    const double r = autocorrelation(eta, std::size_t(k));
    q += r * r / double(n - k);
  }
  q *= double(n) * (double(n) + 2.0);
  rep.ljung_box_p = chi2_sf(q, double(lb_lags));

  // ARCH LM: m R^2 from regressing eta^2 on its first lag.
  {
    std::vector<double> sq(n);
    for (std::size_t t = 0; t < n; ++t) sq[t] = eta[t] * eta[t];
    const std::size_t m = n - 1;
    std::span<const double> y(sq.data() + 1, m);
    std::span<const double> x(sq.data(), m);
    const double my = mean(y), mx = mean(x);
    double sxy = 0.0, sxx = 0.0, syy = 0.0;
    for (std::size_t t = 0; t < m; ++t) {
      sxy += (x[t] - mx) * (y[t] - my);
      sxx += (x[t] - mx) * (x[t] - mx);
      syy += (y[t] - my) * (y[t] - my);
    }
    const double r2 = (sxx > 0.0 && syy > 0.0) ? sxy * sxy / (sxx * syy) : 0.0;
    rep.arch_p = chi2_sf(double(m) * r2, 1.0);
  }
  return rep;
}

}  // namespace storage
