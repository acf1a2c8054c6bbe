#pragma once

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "storage/benchmarks.hpp"
#include "storage/cml_likelihood.hpp"
#include "storage/nelder_mead.hpp"
#include "storage/parallel.hpp"
#include "storage/pf_likelihood.hpp"
#include "storage/simulate.hpp"
#include "storage/transform.hpp"

namespace storage {

enum class Method { SML, CML };

struct EstimateConfig {
  Method method = Method::SML;
  FilterConfig filter;       // used for SML and for diagnostics at theta-hat
  CmlConfig cml;             // used for CML
  NelderMeadOptions optimizer;
  ParamMask mask;            // coordinates held fixed (e.g. rho = 0)
};

struct EstimationReport {
  StructuralParams theta_hat;
  double loglik = -std::numeric_limits<double>::infinity();
  int evaluations = 0;
  int iterations = 0;
  double simplex_diameter = 0.0;
  bool converged = false;
  std::optional<DiagnosticsReport> diagnostics;
  std::vector<double> stockout_probability;  // filtered, at theta-hat
  std::vector<double> implied_storage;       // filtered median, at theta-hat
  std::array<double, 4> bootstrap_se{};      // (rho, a, b, delta); 0 = not run
  std::array<double, 4> mc_std{};            // Monte Carlo std across seeds
  double mc_std_loglik = 0.0;
};

// Objective value for one theta with common random numbers (the seed is
// fixed across all evaluations within one optimization).
inline double objective_value(const StructuralParams& theta,
                              const PriceSeries& series, std::uint64_t seed,
                              const EstimateConfig& cfg) {
  if (!theta.valid() || theta.delta <= 0.0)
    return -std::numeric_limits<double>::infinity();
  try {
    if (cfg.method == Method::SML)
      return pf_loglik(theta, series, seed, cfg.filter).loglik;
    return cml_loglik(theta, series, seed, cfg.cml).loglik;
  } catch (const std::exception&) {
    return -std::numeric_limits<double>::infinity();
  }
}

inline EstimationReport estimate(const PriceSeries& series,
                                 const StructuralParams& start,
                                 std::uint64_t seed,
                                 const EstimateConfig& cfg = {},
                                 bool with_diagnostics = true) {
  start.validate();
  const std::array<double, 4> u0 = param_transform::to_unconstrained(start);

  const auto obj = [&](const std::vector<double>& x) {
    const StructuralParams theta =
        param_transform::from_unconstrained(cfg.mask.unpack(x, u0), start.r);
    return objective_value(theta, series, seed, cfg);
  };

  const NelderMeadResult r =
      nelder_mead_maximize(obj, cfg.mask.pack(u0), cfg.optimizer);

  EstimationReport rep;
  rep.theta_hat =
      param_transform::from_unconstrained(cfg.mask.unpack(r.x, u0), start.r);
  rep.loglik = r.value;
  rep.evaluations = r.evaluations;
  rep.iterations = r.iterations;
  rep.simplex_diameter = r.simplex_diameter;
  rep.converged = r.converged;

  if (with_diagnostics) {
    // Residual diagnostics always come from a particle-filter pass at the
    // optimum, regardless of the estimation method.
    const FilterOutput out = pf_loglik(rep.theta_hat, series, seed, cfg.filter);
    if (!out.degenerate && series.size() >= 31) {
      rep.diagnostics = residual_diagnostics(generalized_residuals(out));
      rep.stockout_probability = out.stockout_probability;
      rep.implied_storage = out.implied_storage;
    }
  }
  return rep;
}

struct BootstrapResult {
  std::array<double, 4> std_errors{};  // NaN-free; zero when replicas < 2
  std::vector<StructuralParams> replica_estimates;
  std::vector<double> replica_logliks;  // storage-model loglik at each replica fit
  std::vector<std::uint64_t> replica_seeds;
  int failed_replicas = 0;
};

// Regenerates the replica series deterministically from (theta_hat, seed,
// replica index); lr_bootstrap_compare relies on this to refit competitors.
inline PriceSeries bootstrap_replica_series(const StructuralParams& theta_hat,
                                            const PriceFunctionTable& pf,
                                            std::size_t T, std::uint64_t seed,
                                            std::size_t replica,
                                            int periods_per_year) {
  return simulate_dgp(theta_hat, pf, T, seed ^ (0xb00u + replica), {},
                      periods_per_year)
      .prices;
}

inline BootstrapResult parametric_bootstrap(const StructuralParams& theta_hat,
                                            std::size_t T, std::size_t replicas,
                                            std::uint64_t seed,
                                            const EstimateConfig& cfg = {},
                                            int periods_per_year = 12) {
  theta_hat.validate();
  const PriceFunctionTable pf = solve_price_function(
      theta_hat, cfg.method == Method::SML ? cfg.filter.solver : cfg.cml.solver);

  BootstrapResult res;
  std::vector<std::optional<StructuralParams>> fits(replicas);
  std::vector<double> lls(replicas);
  for (std::size_t i = 0; i < replicas; ++i) {
    const PriceSeries series =
        bootstrap_replica_series(theta_hat, pf, T, seed, i, periods_per_year);
    const std::uint64_t fit_seed = seed ^ (0xf17u + i);
    EstimationReport rep =
        estimate(series, theta_hat, fit_seed, cfg, /*with_diagnostics=*/false);
    const bool failed = !std::isfinite(rep.loglik) ||
                        (!rep.converged && rep.simplex_diameter > 1e-2);
    if (failed) {
      ++res.failed_replicas;
      continue;
    }
    fits[i] = rep.theta_hat;
    lls[i] = rep.loglik;
    res.replica_seeds.push_back(seed ^ (0xb00u + i));
  }
  for (std::size_t i = 0; i < replicas; ++i) {
    if (!fits[i]) continue;
    res.replica_estimates.push_back(*fits[i]);
    res.replica_logliks.push_back(lls[i]);
  }

  const std::size_t n = res.replica_estimates.size();
  if (n >= 2) {
    const auto get = [&](const StructuralParams& p, int k) {
      return k == 0 ? p.rho : k == 1 ? p.a : k == 2 ? p.b : p.delta;
    };
    for (int k = 0; k < 4; ++k) {
      std::vector<double> v(n);
      for (std::size_t i = 0; i < n; ++i) v[i] = get(res.replica_estimates[i], k);
      res.std_errors[k] = std::sqrt(variance(v));
    }
  }
  return res;
}

struct ExperimentSpec {
  StructuralParams true_params;
  std::size_t T = 500;
  std::size_t replicas = 20;
  int periods_per_year = 12;
  Method method = Method::SML;
  ShockDistribution shocks;
  std::uint64_t seed = 1;
  std::size_t mc_seeds = 10;  // repeated estimations of one fixed dataset
  EstimateConfig estimate_cfg;
};

struct ExperimentResult {
  std::array<double, 4> bias{}, sd{}, rmse{};
  std::array<double, 4> mc_std{};
  double mc_std_loglik = 0.0;
  double eval_seconds = 0.0;  // timing of one objective evaluation
  int failed_replicas = 0;
  std::vector<StructuralParams> replica_estimates;
};

// Simulation-study harness: bias/SD/RMSE across replicas started at the true
// parameters, plus Monte Carlo spread from re-estimating one fixed dataset
// under different filter seeds.
inline ExperimentResult run_experiment(const ExperimentSpec& spec) {
  spec.true_params.validate();
  EstimateConfig cfg = spec.estimate_cfg;
  cfg.method = spec.method;
  const PriceFunctionTable pf = solve_price_function(
      spec.true_params,
      spec.method == Method::SML ? cfg.filter.solver : cfg.cml.solver);

  ExperimentResult res;

  // Timing of one objective evaluation.
  {
    const PriceSeries warm = simulate_dgp(spec.true_params, pf, spec.T,
                                          spec.seed ^ 0x7137, spec.shocks,
                                          spec.periods_per_year)
                                 .prices;
    const auto t0 = std::chrono::steady_clock::now();
    objective_value(spec.true_params, warm, spec.seed, cfg);
    res.eval_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
  }

  std::vector<std::optional<StructuralParams>> fits(spec.replicas);
  for (std::size_t rpl = 0; rpl < spec.replicas; ++rpl) {
    const PriceSeries series =
        simulate_dgp(spec.true_params, pf, spec.T, spec.seed ^ (0xe000u + rpl),
                     spec.shocks, spec.periods_per_year)
            .prices;
    EstimationReport rep = estimate(series, spec.true_params,
                                    spec.seed ^ (0xe500u + rpl), cfg,
                                    /*with_diagnostics=*/false);
    const bool failed = !std::isfinite(rep.loglik) ||
                        (!rep.converged && rep.simplex_diameter > 1e-2);
    if (failed)
      ++res.failed_replicas;
    else
      fits[rpl] = rep.theta_hat;
  }

  const auto get = [&](const StructuralParams& p, int k) {
    return k == 0 ? p.rho : k == 1 ? p.a : k == 2 ? p.b : p.delta;
  };
  for (const auto& f : fits)
    if (f) res.replica_estimates.push_back(*f);
  const std::size_t n = res.replica_estimates.size();
  if (n >= 1) {
    for (int k = 0; k < 4; ++k) {
      std::vector<double> v(n);
      for (std::size_t i = 0; i < n; ++i) v[i] = get(res.replica_estimates[i], k);
      const double truth = get(spec.true_params, k);
      res.bias[k] = mean(v) - truth;
      res.sd[k] = n >= 2 ? std::sqrt(variance(v)) : 0.0;
      double mse = 0.0;
      for (double x : v) mse += (x - truth) * (x - truth);
      res.rmse[k] = std::sqrt(mse / double(n));
    }
  }

  // MC std: one fixed dataset, varying seeds.
  if (spec.mc_seeds >= 2) {
    const PriceSeries fixed = simulate_dgp(spec.true_params, pf, spec.T,
                                           spec.seed ^ 0xf1dedu, spec.shocks,
                                           spec.periods_per_year)
                                  .prices;
    std::vector<StructuralParams> mc_fits;
    std::vector<double> mc_lls;
    for (std::size_t s = 0; s < spec.mc_seeds; ++s) {
      EstimationReport rep = estimate(fixed, spec.true_params,
                                      spec.seed ^ (0x3c00u + s), cfg,
                                      /*with_diagnostics=*/false);
      if (std::isfinite(rep.loglik)) {
        mc_fits.push_back(rep.theta_hat);
        mc_lls.push_back(rep.loglik);
      }
    }
    if (mc_fits.size() >= 2) {
      for (int k = 0; k < 4; ++k) {
        std::vector<double> v(mc_fits.size());
        for (std::size_t i = 0; i < mc_fits.size(); ++i) v[i] = get(mc_fits[i], k);
        res.mc_std[k] = std::sqrt(variance(v));
      }
      res.mc_std_loglik = std::sqrt(variance(mc_lls));
    }
  }
  return res;
}

enum class BenchmarkModel { Ar1, Garch, MsAr1, StorageSelf };

struct LrComparison {
  double observed_lr = 0.0;
  std::vector<double> simulated_lrs;  // sorted ascending
  int rank = 0;                       // # simulated LRs below the observed one
  int failed_replicas = 0;
};

inline double fit_benchmark_loglik(BenchmarkModel model, const PriceSeries& s) {
  switch (model) {
    case BenchmarkModel::Ar1:
      return fit_ar1(s).loglik;
    case BenchmarkModel::Garch:
      return fit_garch(s).loglik;
    case BenchmarkModel::MsAr1:
      return fit_ms_ar1(s).loglik;
    default:
      return 0.0;
  }
}

// Parametric-bootstrap likelihood-ratio comparison: the competitor is refit
// to each replica simulated from the fitted storage model, and the observed
// LR is ranked within the simulated LR distribution.
inline LrComparison lr_bootstrap_compare(const StructuralParams& theta_hat,
                                         double storage_loglik,
                                         const PriceSeries& series,
                                         BenchmarkModel competitor,
                                         const BootstrapResult& boot,
                                         const EstimateConfig& cfg = {}) {
  LrComparison cmp;
  if (competitor == BenchmarkModel::StorageSelf) {
    cmp.observed_lr = 0.0;
  } else {
    cmp.observed_lr =
        2.0 * (storage_loglik - fit_benchmark_loglik(competitor, series));
  }

  const PriceFunctionTable pf =
      solve_price_function(theta_hat, cfg.filter.solver);
  for (std::size_t i = 0; i < boot.replica_estimates.size(); ++i) {
    PriceSeries rep_series;
    {
      SimulatedPath path = simulate_dgp(theta_hat, pf, series.size(),
                                        boot.replica_seeds[i], {},
                                        series.periods_per_year);
      rep_series = std::move(path.prices);
    }
    try {
      const double comp_ll =
          competitor == BenchmarkModel::StorageSelf
              ? boot.replica_logliks[i]
              : fit_benchmark_loglik(competitor, rep_series);
      cmp.simulated_lrs.push_back(2.0 * (boot.replica_logliks[i] - comp_ll));
    } catch (const std::exception&) {
      ++cmp.failed_replicas;
    }
  }
  std::sort(cmp.simulated_lrs.begin(), cmp.simulated_lrs.end());
  cmp.rank = int(std::lower_bound(cmp.simulated_lrs.begin(),
                                  cmp.simulated_lrs.end(), cmp.observed_lr) -
                 cmp.simulated_lrs.begin());
  return cmp;
}

}  // namespace storage
