#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "storage/cml_likelihood.hpp"
#include "storage/pf_likelihood.hpp"
#include "storage/price_solver.hpp"
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

CmlConfig small_cml() {
  CmlConfig cfg;
  cfg.n_i = 4000;
  cfg.n_t = 8;
  cfg.n_g = 64;
  return cfg;
}

}  // namespace

TEST_CASE("cml objective is deterministic") {
  const StructuralParams p = monthly_true();
  const PriceFunctionTable pf = solve_price_function(p);
  const PriceSeries series = simulate_dgp(p, pf, 100, 12).prices;

  const CmlConfig cfg = small_cml();
  const CmlOutput a = cml_loglik_with_table(pf, p, series, 4, cfg);
  const CmlOutput b = cml_loglik_with_table(pf, p, series, 4, cfg);
  CHECK(a.loglik == b.loglik);
  CHECK(a.mu_bar == b.mu_bar);
  CHECK(std::isfinite(a.loglik));
  const CmlOutput c = cml_loglik_with_table(pf, p, series, 5, cfg);
  CHECK(a.loglik != c.loglik);
}

TEST_CASE("kernel-weighted moments match a hand evaluation") {
  const StructuralParams p = monthly_true();
  const PriceFunctionTable pf = solve_price_function(p);
  const QuadratureRule quad = gauss_hermite_nodes(16);

  const std::vector<double> zgrid = {-1.0, 0.0, 1.0};
  const std::vector<double> wj = {0.2, 0.3, 0.5};
  double mu_bar = 0.0, s2_bar = 0.0;
  REQUIRE(cml_weighted_moments(pf, p, 1.1, zgrid, wj, quad, mu_bar, s2_bar));

  double wsum = 0.0, mu_acc = 0.0, s2_acc = 0.0;
  for (std::size_t j = 0; j < 3; ++j) {
    const PredictiveMoments m = predictive_moments(pf, p, 1.1, zgrid[j], quad);
    wsum += wj[j];
    mu_acc += wj[j] * m.mu;
    s2_acc += wj[j] * m.sigma2;
  }
  CHECK(mu_bar == Catch::Approx(mu_acc / wsum).epsilon(1e-14));
  CHECK(s2_bar == Catch::Approx(s2_acc / wsum).epsilon(1e-14));

  // Degenerate-weight input reports failure instead of dividing by zero.
  double dummy1, dummy2;
  CHECK_FALSE(cml_weighted_moments(pf, p, 1.1, zgrid, {0.0, 0.0, 0.0}, quad,
                                   dummy1, dummy2));

  // Point mass on one grid node reproduces that node's moments exactly.
  const PredictiveMoments m1 = predictive_moments(pf, p, 1.1, 0.0, quad);
  REQUIRE(cml_weighted_moments(pf, p, 1.1, zgrid, {0.0, 7.0, 0.0}, quad,
                               mu_bar, s2_bar));
  CHECK(mu_bar == Catch::Approx(m1.mu).epsilon(1e-14));
  CHECK(s2_bar == Catch::Approx(m1.sigma2).epsilon(1e-14));
}

TEST_CASE("predictive means are convex combinations over the shock range") {
  const StructuralParams p = monthly_true();
  const PriceFunctionTable pf = solve_price_function(p);
  const PriceSeries series = simulate_dgp(p, pf, 60, 18).prices;

  const CmlConfig cfg = small_cml();
  const CmlOutput out = cml_loglik_with_table(pf, p, series, 6, cfg);
  REQUIRE(!out.degenerate);

  const QuadratureRule quad = gauss_hermite_nodes(16);
  const double sd = 1.0 / std::sqrt(1.0 - p.rho * p.rho);
  for (std::size_t t = 0; t + 1 < series.size(); ++t) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (int j = 0; j <= 80; ++j) {
      const double z = -8.0 * sd + 16.0 * sd * double(j) / 80.0;
      const double mu = predictive_moments(pf, p, series.values[t], z, quad).mu;
      lo = std::min(lo, mu);
      hi = std::max(hi, mu);
    }
    CHECK(out.mu_bar[t] >= lo - 1e-9);
    CHECK(out.mu_bar[t] <= hi + 1e-9);
  }
}

TEST_CASE("iid supply shocks align cml and filter means") {
  StructuralParams p = monthly_true();
  p.rho = 0.0;
  const PriceFunctionTable pf = solve_price_function(p);
  const PriceSeries series = simulate_dgp(p, pf, 50, 27).prices;

  const CmlOutput cml = cml_loglik_with_table(pf, p, series, 6, small_cml());
  REQUIRE(!cml.degenerate);

  // With rho = 0 the predictive mean no longer depends on history beyond p_t.
  const QuadratureRule quad = gauss_hermite_nodes(16);
  for (std::size_t t = 0; t + 1 < series.size(); ++t) {
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (int j = 0; j <= 40; ++j) {
      const double z = -4.0 + 8.0 * double(j) / 40.0;
      const double mu = predictive_moments(pf, p, series.values[t], z, quad).mu;
      lo = std::min(lo, mu);
      hi = std::max(hi, mu);
    }
    // The z-dependence collapses, so the kernel average is pinned down.
    CHECK(hi - lo < 0.25);
    CHECK(cml.mu_bar[t] == Catch::Approx(0.5 * (lo + hi)).margin(0.5 * (hi - lo) + 0.02));
  }
}

TEST_CASE("observations far outside the simulated support degenerate") {
  const StructuralParams p = monthly_true();
  const PriceFunctionTable pf = solve_price_function(p);
  PriceSeries absurd;
  absurd.values = {1.0, 1e9, 1.0};
  const CmlOutput out = cml_loglik_with_table(pf, p, absurd, 4, small_cml());
  CHECK(out.degenerate);
  CHECK(out.loglik == -std::numeric_limits<double>::infinity());
}
