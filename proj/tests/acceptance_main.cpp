// Acceptance gate: one line per criterion, PASS/FAIL, nonzero exit on any
// failure. Slow full-scale studies (criteria 4 and 5) run 5-replica smoke
// variants by default; set STORAGE_ACCEPT_FULL=1 for the complete runs.

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "storage/storage.hpp"

using namespace storage;

namespace {

int failures = 0;

void report(int criterion, bool ok, const std::string& detail) {
  std::printf("criterion %2d: %s%s%s\n", criterion, ok ? "PASS" : "FAIL",
              detail.empty() ? "" : " — ", detail.c_str());
  std::fflush(stdout);
  if (!ok) ++failures;
}

void report_skip(int criterion, const std::string& detail) {
  std::printf("criterion %2d: SKIP — %s\n", criterion, detail.c_str());
  std::fflush(stdout);
}

StructuralParams monthly_true() {
  StructuralParams p;
  p.rho = 0.97;
  p.a = 1.5;
  p.b = -0.4;
  p.delta = 0.02;
  p.r = period_rate(0.05, 12);
  return p;
}

StructuralParams yearly_true() {
  StructuralParams p;
  p.rho = 0.918;
  p.a = 0.223;
  p.b = -0.038;
  p.delta = 0.046;
  p.r = 0.05;
  return p;
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

bool full_scale() {
  const char* env = std::getenv("STORAGE_ACCEPT_FULL");
  return env && std::string(env) == "1";
}

// ---- criterion 1: long-run simulated price moments -------------------------

void criterion_long_run_moments() {
  const StructuralParams p = monthly_true();
  const PriceFunctionTable pf = solve_price_function(p);
  const SimulatedPath path = simulate_dgp(p, pf, 1000000, 4101);
  const StatsRecord s = price_stats(path.prices, &pf, &path.shocks);
  const double stockout = s.stockout_frequency.value_or(-1.0);
  const bool ok = std::fabs(s.mean - 0.8583) <= 0.02 &&
                  std::fabs(s.sd - 0.6752) <= 0.03 &&
                  std::fabs(s.ac1 - 0.9677) <= 0.005 &&
                  std::fabs(stockout - 0.0423) <= 0.010;
  report(1, ok,
         "mean=" + fmt(s.mean) + " sd=" + fmt(s.sd) + " ac1=" + fmt(s.ac1) +
             " stockout=" + fmt(stockout));
}

// ---- criterion 2: filter Monte Carlo precision ------------------------------

void criterion_filter_precision() {
  const StructuralParams p = monthly_true();
  const PriceFunctionTable pf = solve_price_function(p);
  const PriceSeries series = simulate_dgp(p, pf, 250, 4202).prices;
  std::vector<double> ll(10);
  for (int s = 0; s < 10; ++s)
    ll[s] = pf_loglik_with_table(pf, p, series, 4300 + s).loglik;
  const double sd = std::sqrt(variance(ll));
  report(2, sd <= 0.1, "std of loglik over 10 seeds = " + fmt(sd));
}

// ---- criterion 3: dense quadrature oracle on T=3 ----------------------------

double quadrature_loglik_t3(const PriceFunctionTable& pf,
                            const StructuralParams& params,
                            const std::vector<double>& p, int n_grid) {
  const QuadratureRule quad = gauss_hermite_nodes(16);
  const double sd_stat = 1.0 / std::sqrt(1.0 - params.rho * params.rho);
  const double lo = -6.0 * sd_stat, hi = 6.0 * sd_stat;
  const double dz = (hi - lo) / double(n_grid - 1);
  std::vector<double> z(n_grid), g2(n_grid), mu1(n_grid), s1(n_grid);
  for (int i = 0; i < n_grid; ++i) z[i] = lo + dz * i;
  for (int i = 0; i < n_grid; ++i) {
    const PredictiveMoments m1 = predictive_moments(pf, params, p[0], z[i], quad);
    mu1[i] = m1.mu;
    s1[i] = m1.sigma2;
    const PredictiveMoments m2 = predictive_moments(pf, params, p[1], z[i], quad);
    g2[i] = norm_pdf(p[2], m2.mu, m2.sigma2);
  }
  double outer = 0.0;
  for (int i = 0; i < n_grid; ++i) {
    double inner = 0.0;
    for (int j = 0; j < n_grid; ++j)
      inner += norm_pdf(z[j], params.rho * z[i], 1.0) * g2[j];
    outer += norm_pdf(z[i], 0.0, sd_stat * sd_stat) *
             norm_pdf(p[1], mu1[i], s1[i]) * inner * dz;
  }
  return std::log(outer * dz);
}

void criterion_oracle_equivalence() {
  const StructuralParams p = monthly_true();
  const PriceFunctionTable pf = solve_price_function(p);
  const PriceSeries series = simulate_dgp(p, pf, 3, 4401).prices;
  const double oracle = std::exp(quadrature_loglik_t3(pf, p, series.values, 2000));

  FilterConfig cfg;
  cfg.n_particles = 1u << 16;
  const int n_seeds = 20;
  std::vector<double> lhat(n_seeds);
  for (int s = 0; s < n_seeds; ++s)
    lhat[s] = std::exp(pf_loglik_with_table(pf, p, series, 4500 + s, cfg).loglik);
  const double m = mean(lhat);
  const double se = std::sqrt(variance(lhat) / double(n_seeds));
  const bool ok = std::fabs(m - oracle) <= 3.0 * se;
  report(3, ok,
         "filter mean=" + fmt(m) + " oracle=" + fmt(oracle) +
             " |diff|/se=" + fmt(se > 0.0 ? std::fabs(m - oracle) / se : 0.0));
}

// ---- criteria 4 and 5: simulation studies -----------------------------------

ExperimentResult run_study(const StructuralParams& truth, std::size_t T,
                           std::size_t replicas, Method method,
                           int periods_per_year, std::uint64_t seed,
                           bool smoke) {
  ExperimentSpec spec;
  spec.true_params = truth;
  spec.T = T;
  spec.replicas = replicas;
  spec.periods_per_year = periods_per_year;
  spec.method = method;
  spec.seed = seed;
  spec.mc_seeds = 0;
  spec.estimate_cfg.optimizer.max_evaluations = smoke ? 200 : 300;
  if (smoke) {
    // The smoke variant checks wiring, not precision: fewer particles and a
    // loose convergence tolerance the budget can actually reach.
    spec.estimate_cfg.filter.n_particles = 1024;
    spec.estimate_cfg.optimizer.f_tol = 1e-3;
    spec.estimate_cfg.optimizer.x_tol = 1e-3;
  }
  return run_experiment(spec);
}

void criterion_monthly_bias_study() {
  const bool full = full_scale();
  const std::size_t replicas = full ? 20 : 5;
  const ExperimentResult sml =
      run_study(monthly_true(), 500, replicas, Method::SML, 12, 4601, !full);
  if (!full) {
    // Smoke variant: the pipeline produces usable, sane estimates. Strict
    // per-replica convergence at the reduced budget is a precision property
    // checked by the full study.
    const bool ok = sml.failed_replicas <= 1 &&
                    std::isfinite(sml.bias[0]) && std::isfinite(sml.rmse[0]) &&
                    std::fabs(sml.bias[0]) <= 0.05;
    report(4, ok,
           "smoke (5 replicas): bias(rho)=" + fmt(sml.bias[0]) +
               " rmse(rho)=" + fmt(sml.rmse[0]) + " failed=" +
               std::to_string(sml.failed_replicas) +
               "; set STORAGE_ACCEPT_FULL=1 for the full study");
    return;
  }
  const ExperimentResult cml =
      run_study(monthly_true(), 500, replicas, Method::CML, 12, 4601, false);
  const bool ok = sml.bias[0] >= -0.02 && sml.bias[0] <= 0.01 &&
                  sml.rmse[0] <= 0.025 && sml.rmse[0] < cml.rmse[0];
  report(4, ok,
         "bias(rho)=" + fmt(sml.bias[0]) + " rmse(rho)=" + fmt(sml.rmse[0]) +
             " cml rmse(rho)=" + fmt(cml.rmse[0]));
}

void criterion_yearly_study() {
  const bool full = full_scale();
  const std::size_t replicas = full ? 20 : 5;
  const ExperimentResult res =
      run_study(yearly_true(), 100, replicas, Method::SML, 1, 4701, !full);
  if (!full) {
    const bool ok = res.failed_replicas <= 1 &&
                    std::isfinite(res.bias[0]) && std::isfinite(res.rmse[0]) &&
                    std::fabs(res.bias[0]) <= 0.05;
    report(5, ok,
           "smoke (5 replicas): bias(rho)=" + fmt(res.bias[0]) +
               " rmse(rho)=" + fmt(res.rmse[0]) + " failed=" +
               std::to_string(res.failed_replicas) +
               "; set STORAGE_ACCEPT_FULL=1 for the full study");
    return;
  }
  const bool ok = std::fabs(res.bias[0]) <= 0.02 && res.rmse[0] >= 0.017 &&
                  res.rmse[0] <= 0.051;
  report(5, ok,
         "bias(rho)=" + fmt(res.bias[0]) + " rmse(rho)=" + fmt(res.rmse[0]));
}

// ---- criterion 6: continuity of the simulated likelihood --------------------

void criterion_continuity() {
  const StructuralParams p = monthly_true();
  const PriceFunctionTable pf = solve_price_function(p);
  const PriceSeries series = simulate_dgp(p, pf, 100, 4801).prices;

  const double base = pf_loglik(p, series, 4802).loglik;
  double worst = 0.0;
  const double h = 1e-4;
  for (int coord = 0; coord < 4; ++coord)
    for (double sign : {-1.0, 1.0}) {
      StructuralParams q = p;
      (coord == 0   ? q.rho
       : coord == 1 ? q.a
       : coord == 2 ? q.b
                    : q.delta) += sign * h;
      worst = std::max(worst,
                       std::fabs(pf_loglik(q, series, 4802).loglik - base));
    }
  report(6, worst < 0.1, "max |delta loglik| over 1e-4 perturbations = " + fmt(worst));
}

// ---- criterion 7: resampler battery -----------------------------------------

void criterion_resampler() {
  Rng meta(4901, 1);
  double worst = 0.0;
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t sizes[3] = {1, 10, 4096};
    MixtureSpec spec;
    const std::size_t nc = sizes[rep % 3];
    spec.means.resize(nc);
    spec.weights.resize(nc);
    double wsum = 0.0;
    for (std::size_t j = 0; j < nc; ++j) {
      spec.means[j] = 6.0 * meta.uniform() - 3.0;
      spec.weights[j] = 0.05 + meta.uniform();
      wsum += spec.weights[j];
    }
    for (auto& w : spec.weights) w /= wsum;
    spec.variance = 0.5 + 1.5 * meta.uniform();

    Rng r(4950 + rep, 1);
    const std::vector<double> draws = resample_mixture(spec, 1u << 16, r);
    const double sd = std::sqrt(spec.variance);
    double d = 0.0;
    for (std::size_t i = 0; i < draws.size(); ++i) {
      double c = 0.0;
      for (std::size_t j = 0; j < nc; ++j)
        c += spec.weights[j] *
             0.5 * std::erfc(-(draws[i] - spec.means[j]) / (sd * std::sqrt(2.0)));
      d = std::max(d, std::fabs(c - double(i) / double(draws.size())));
      d = std::max(d, std::fabs(c - double(i + 1) / double(draws.size())));
    }
    worst = std::max(worst, d);
  }
  report(7, worst < 0.01, "max KS distance over 20 mixtures = " + fmt(worst));
}

// ---- criterion 8: zero-storage reduction ------------------------------------

void criterion_zero_storage() {
  StructuralParams p = monthly_true();
  p.rho = 0.5;
  p.delta = 1.0;
  const PriceFunctionTable pf = solve_price_function(p);
  double worst = 0.0;
  for (double price : {1.2, 1.4, 1.6, 1.8}) {
    const double z = inverse_demand(price, p);
    const PredictiveMoments m = predictive_moments(pf, p, price, z);
    const double mu_exact = p.a + p.rho * (price - p.a);
    worst = std::max(worst, std::fabs(m.mu - mu_exact) / std::fabs(mu_exact));
    worst = std::max(worst, std::fabs(m.sigma2 - p.b * p.b) / (p.b * p.b));
  }
  report(8, worst < 1e-3, "max relative moment error = " + fmt(worst));
}

// ---- criterion 9: residual calibration --------------------------------------

void criterion_residual_calibration() {
  const StructuralParams p = monthly_true();
  const PriceFunctionTable pf = solve_price_function(p);
  int passed = 0;
  for (int rep = 0; rep < 100; ++rep) {
    const PriceSeries series = simulate_dgp(p, pf, 250, 5000 + rep).prices;
    const FilterOutput out = pf_loglik_with_table(pf, p, series, 5200 + rep);
    if (out.degenerate) continue;
    const DiagnosticsReport d =
        residual_diagnostics(generalized_residuals(out));
    passed += !d.degenerate && d.ks_normal_p > 0.01;
  }
  report(9, passed >= 95,
         "KS vs N(0,1) passed at the 1% level in " + std::to_string(passed) +
             "/100 replicas");
}

// ---- criterion 10: nesting and determinism ----------------------------------

void criterion_nesting_and_determinism() {
  const StructuralParams p = monthly_true();
  const PriceFunctionTable pf = solve_price_function(p);

  bool nesting = true;
  for (std::uint64_t seed : {5301u, 5302u, 5303u}) {
    const PriceSeries s = simulate_dgp(p, pf, 300, seed).prices;
    const double ar1 = fit_ar1(s).loglik;
    nesting = nesting && fit_garch(s).loglik >= ar1 - 1e-6 &&
              fit_ms_ar1(s).loglik >= ar1 - 1e-6;
  }

  // Byte-identical machine-readable outputs under an identical resolved
  // configuration.
  EstimateConfig cfg;
  cfg.filter.n_particles = 512;
  cfg.filter.solver.grid.mz = 16;
  cfg.filter.solver.grid.mx1 = 32;
  cfg.filter.solver.grid.mx2 = 32;
  cfg.filter.solver.iterations = 120;
  cfg.filter.resample_grid_size = 256;
  cfg.optimizer.max_evaluations = 30;
  const PriceFunctionTable pft = solve_price_function(p, cfg.filter.solver);
  const PriceSeries series = simulate_dgp(p, pft, 60, 5304).prices;

  bool identical = true;
  std::string first;
  for (int run = 0; run < 2; ++run) {
    const EstimationReport rep = estimate(series, p, 5305, cfg);
    const std::string dir = "acceptance_out_" + std::to_string(run);
    emit_report(rep, series, dir);
    std::ifstream in(dir + "/results.txt");
    std::stringstream buf;
    buf << in.rdbuf();
    if (run == 0)
      first = buf.str();
    else
      identical = buf.str() == first && !first.empty();
  }
  report(10, nesting && identical,
         std::string("nesting=") + (nesting ? "ok" : "violated") +
             " determinism=" + (identical ? "ok" : "violated"));
}

// ---- criterion 11: optional natural-gas application -------------------------

void criterion_natural_gas() {
  const char* path = std::getenv("STORAGE_GAS_CSV");
  if (!path) {
    report_skip(11, "optional; set STORAGE_GAS_CSV to a date,price CSV of the "
                    "monthly Henry Hub series to enable");
    return;
  }
  PriceSeries series = load_prices(path, 12);
  const Ar1Fit ar1 = fit_ar1(series);

  StructuralParams start;
  start.rho = 0.95;
  start.a = 1.2;
  start.b = -0.3;
  start.delta = 0.03;
  start.r = period_rate(0.05, 12);
  EstimateConfig cfg;
  const EstimationReport rep = estimate(series, start, 5401, cfg);
  const BootstrapResult boot =
      parametric_bootstrap(rep.theta_hat, series.size(), 20, 5402, cfg);

  const double ref[4] = {0.968, 1.471, -0.408, 0.0212};
  const double est[4] = {rep.theta_hat.rho, rep.theta_hat.a, rep.theta_hat.b,
                         rep.theta_hat.delta};
  bool ok = std::fabs(rep.loglik - 194.32) <= 0.5 &&
            std::fabs(ar1.loglik - 65.34) <= 0.1;
  for (int k = 0; k < 4; ++k)
    ok = ok && std::fabs(est[k] - ref[k]) <= std::max(boot.std_errors[k], 1e-6);
  report(11, ok,
         "loglik=" + fmt(rep.loglik) + " ar1=" + fmt(ar1.loglik) + " rho=" +
             fmt(est[0]) + " a=" + fmt(est[1]) + " b=" + fmt(est[2]) +
             " delta=" + fmt(est[3]));
}

}  // namespace

int main() {
  criterion_long_run_moments();
  criterion_filter_precision();
  criterion_oracle_equivalence();
  criterion_monthly_bias_study();
  criterion_yearly_study();
  criterion_continuity();
  criterion_resampler();
  criterion_zero_storage();
  criterion_residual_calibration();
  criterion_nesting_and_determinism();
  criterion_natural_gas();
  if (failures > 0) {
    std::printf("%d criterion(s) failed\n", failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}
