#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "storage/estimators.hpp"
#include "storage/nelder_mead.hpp"
#include "storage/simulate.hpp"

using namespace storage;

namespace {

StructuralParams monthly_true() {
  StructuralParams p;
  p.rho = 0.97;
  p.a = 1.5;
  p.b = -0.4;
  p.delta = 0.02;
  p.r = period_rate(0.05, 12);
  return p;
}

// Coarse settings keeping optimization-heavy tests fast.
EstimateConfig tiny_config() {
  EstimateConfig cfg;
  cfg.filter.n_particles = 256;
  cfg.filter.solver.grid.mz = 16;
  cfg.filter.solver.grid.mx1 = 32;
  cfg.filter.solver.grid.mx2 = 32;
  cfg.filter.solver.iterations = 120;
  cfg.filter.resample_grid_size = 256;
  cfg.optimizer.max_evaluations = 60;
  return cfg;
}

}  // namespace

TEST_CASE("nelder-mead finds a quadratic optimum") {
  const std::vector<double> c = {0.3, -1.2, 2.5, 0.0};
  const auto f = [&](const std::vector<double>& x) {
    double s = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i)
      s += (x[i] - c[i]) * (x[i] - c[i]);
    return -s;
  };
  const NelderMeadResult r = nelder_mead_maximize(f, {0.0, 0.0, 0.0, 0.0}, {});
  CHECK(r.converged);
  for (std::size_t i = 0; i < c.size(); ++i)
    CHECK(r.x[i] == Catch::Approx(c[i]).margin(1e-5));
}

TEST_CASE("nelder-mead solves the rosenbrock valley") {
  const auto f = [](const std::vector<double>& x) {
    const double a = 1.0 - x[0];
    const double b = x[1] - x[0] * x[0];
    return -(a * a + 100.0 * b * b);
  };
  NelderMeadOptions opt;
  opt.max_evaluations = 5000;
  const NelderMeadResult r = nelder_mead_maximize(f, {-1.2, 1.0}, opt);
  CHECK(r.x[0] == Catch::Approx(1.0).margin(1e-3));
  CHECK(r.x[1] == Catch::Approx(1.0).margin(1e-3));
}

TEST_CASE("nelder-mead handles flat and hostile objectives") {
  const auto flat = [](const std::vector<double>&) { return 1.0; };
  const NelderMeadResult r = nelder_mead_maximize(flat, {0.0, 0.0}, {});
  CHECK(r.converged);
  CHECK(r.value == 1.0);

  const auto nan_at_start = [](const std::vector<double>&) {
    return std::numeric_limits<double>::quiet_NaN();
  };
  CHECK_THROWS(nelder_mead_maximize(nan_at_start, {0.0}, {}));

  // Non-finite away from the start is tolerated (treated as -inf).
  const auto cliff = [](const std::vector<double>& x) {
    if (x[0] > 0.02) return std::numeric_limits<double>::quiet_NaN();
    return -x[0] * x[0];
  };
  const NelderMeadResult rc = nelder_mead_maximize(cliff, {0.0}, {});
  CHECK(rc.x[0] == Catch::Approx(0.0).margin(1e-4));
}

TEST_CASE("nelder-mead never returns worse than the start") {
  const auto f = [](const std::vector<double>& x) {
    return -std::fabs(x[0] - 4.0) - std::fabs(x[1]);
  };
  const std::vector<double> start = {1.0, 1.0};
  const NelderMeadResult r = nelder_mead_maximize(f, start, {});
  CHECK(r.value >= f(start));
  CHECK(r.evaluations > 0);
}

TEST_CASE("estimation smoke run on simulated data") {
  const StructuralParams p = monthly_true();
  const EstimateConfig cfg = tiny_config();
  const PriceFunctionTable pf = solve_price_function(p, cfg.filter.solver);
  const PriceSeries series = simulate_dgp(p, pf, 80, 41).prices;

  const EstimationReport rep = estimate(series, p, 13, cfg);
  CHECK(std::isfinite(rep.loglik));
  CHECK(rep.theta_hat.valid());
  CHECK(rep.evaluations > 0);
  CHECK(rep.diagnostics.has_value());

  // Same seed and settings reproduce the exact report.
  const EstimationReport rep2 = estimate(series, p, 13, cfg);
  CHECK(rep.loglik == rep2.loglik);
  CHECK(rep.theta_hat.rho == rep2.theta_hat.rho);
}

TEST_CASE("restricted estimation holds coordinates fixed") {
  StructuralParams p = monthly_true();
  p.rho = 0.0;  // data generated without shock persistence
  EstimateConfig cfg = tiny_config();
  cfg.mask.free[0] = false;  // rho stays at the starting value

  const StructuralParams start = p;
  const PriceFunctionTable pf = solve_price_function(p, cfg.filter.solver);
  const PriceSeries series = simulate_dgp(p, pf, 60, 42).prices;
  const EstimationReport rep =
      estimate(series, start, 14, cfg, /*with_diagnostics=*/false);
  CHECK(rep.theta_hat.rho == Catch::Approx(0.0).margin(1e-12));
  CHECK(rep.theta_hat.b < 0.0);
}

TEST_CASE("parametric bootstrap") {
  const StructuralParams p = monthly_true();
  EstimateConfig cfg = tiny_config();
  cfg.optimizer.max_evaluations = 30;

  const BootstrapResult one = parametric_bootstrap(p, 60, 1, 7, cfg);
  CHECK(one.replica_estimates.size() + one.failed_replicas == 1);
  for (double se : one.std_errors) CHECK(se == 0.0);  // reported as missing

  const BootstrapResult a = parametric_bootstrap(p, 60, 3, 7, cfg);
  const BootstrapResult b = parametric_bootstrap(p, 60, 3, 7, cfg);
  REQUIRE(a.replica_estimates.size() == b.replica_estimates.size());
  for (std::size_t i = 0; i < a.replica_estimates.size(); ++i)
    CHECK(a.replica_estimates[i].rho == b.replica_estimates[i].rho);
  if (a.replica_estimates.size() >= 2)
    for (double se : a.std_errors) CHECK(se >= 0.0);
}

TEST_CASE("experiment harness aggregates replica estimates") {
  ExperimentSpec spec;
  spec.true_params = monthly_true();
  spec.T = 60;
  spec.replicas = 2;
  spec.mc_seeds = 2;
  spec.seed = 3;
  spec.estimate_cfg = tiny_config();
  spec.estimate_cfg.optimizer.max_evaluations = 30;

  const ExperimentResult res = run_experiment(spec);
  CHECK(res.eval_seconds > 0.0);
  CHECK(int(res.replica_estimates.size()) + res.failed_replicas == 2);
  if (!res.replica_estimates.empty())
    for (int k = 0; k < 4; ++k) {
      CHECK(std::isfinite(res.bias[k]));
      CHECK(res.rmse[k] >= 0.0);
    }
}

TEST_CASE("self-comparison likelihood ratio is zero") {
  const StructuralParams p = monthly_true();
  EstimateConfig cfg = tiny_config();
  cfg.optimizer.max_evaluations = 30;
  const PriceFunctionTable pf = solve_price_function(p, cfg.filter.solver);
  const PriceSeries series = simulate_dgp(p, pf, 60, 44).prices;

  const BootstrapResult boot = parametric_bootstrap(p, 60, 3, 7, cfg);
  const LrComparison cmp = lr_bootstrap_compare(
      p, 100.0, series, BenchmarkModel::StorageSelf, boot, cfg);
  CHECK(cmp.observed_lr == 0.0);
  CHECK(cmp.simulated_lrs.size() == boot.replica_estimates.size());
  for (double lr : cmp.simulated_lrs) CHECK(lr == 0.0);
}

TEST_CASE("likelihood ratio against a reduced form") {
  const StructuralParams p = monthly_true();
  EstimateConfig cfg = tiny_config();
  cfg.optimizer.max_evaluations = 30;
  const PriceFunctionTable pf = solve_price_function(p, cfg.filter.solver);
  const PriceSeries series = simulate_dgp(p, pf, 120, 45).prices;

  const double storage_ll = pf_loglik(p, series, 7, cfg.filter).loglik;
  const BootstrapResult boot = parametric_bootstrap(p, 120, 3, 7, cfg);
  const LrComparison cmp = lr_bootstrap_compare(p, storage_ll, series,
                                                BenchmarkModel::Ar1, boot, cfg);
  CHECK(std::isfinite(cmp.observed_lr));
  CHECK(cmp.rank >= 0);
  CHECK(cmp.rank <= int(cmp.simulated_lrs.size()));
}
