#pragma once

#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "storage/moments.hpp"
#include "storage/params.hpp"
#include "storage/price_table.hpp"
#include "storage/rng.hpp"
#include "storage/stats.hpp"

namespace storage {

struct SimulatedPath {
  PriceSeries prices;
  std::vector<double> shocks;  // latent z_t aligned with prices
};

inline double draw_shock(Rng& rng, const ShockDistribution& law) {
  return law.kind == ShockKind::StandardGaussian ? rng.normal()
                                                 : rng.student_t_unit_var(law.dof);
}

// Simulate the price process: z follows the AR(1) recursion, prices follow
// the conditionally Gaussian transition with moments from the solved price
// function. The initial price is drawn by a structural warm-up: 1000 burn-in
// periods of the stock recursion starting from zero carry-in, discarded.
inline SimulatedPath simulate_dgp(const StructuralParams& params,
                                  const PriceFunctionTable& pf, std::size_t T,
                                  std::uint64_t seed,
                                  const ShockDistribution& shocks = {},
                                  int periods_per_year = 12,
                                  int quad_order = 16) {
  if (T < 2) throw std::invalid_argument("simulate_dgp: T < 2");
  shocks.validate();
  Rng rng(seed, /*stream=*/0x5131);
  const QuadratureRule quad = gauss_hermite_nodes(quad_order);

  // Stationary start for the shock.
  double z = rng.normal() / std::sqrt(1.0 - params.rho * params.rho);

  // Structural burn-in: x_{t+1} = (1-delta) I_t + z_{t+1} with
  // I_t = x_t - P^{-1}(f(x_t, z_t)), starting from x = z (no carried stock).
  constexpr int kBurnIn = 1000;
  double x = z;
  for (int t = 0; t < kBurnIn; ++t) {
    const double price = eval_price_function(pf, x, z);
    const double carry = std::max(x - inverse_demand(price, params), 0.0);
    z = params.rho * z + rng.normal();
    x = (1.0 - params.delta) * carry + z;
  }
  double p = eval_price_function(pf, x, z);

  SimulatedPath path;
  path.prices.periods_per_year = periods_per_year;
  path.prices.values.reserve(T);
  path.shocks.reserve(T);
  path.prices.values.push_back(p);
  path.shocks.push_back(z);

  for (std::size_t t = 1; t < T; ++t) {
    const PredictiveMoments m = predictive_moments(pf, params, p, z, quad);
    if (!std::isfinite(m.mu) || !std::isfinite(m.sigma2))
      throw std::runtime_error("simulate_dgp: non-finite predictive moments");
    p = m.mu + std::sqrt(m.sigma2) * draw_shock(rng, shocks);
    z = params.rho * z + rng.normal();
    path.prices.values.push_back(p);
    path.shocks.push_back(z);
  }
  return path;
}

// Simulate only the latent AR(1) shock path (used by tests and diagnostics).
inline std::vector<double> simulate_shock_path(double rho, std::size_t T,
                                               std::uint64_t seed) {
  Rng rng(seed, 0x5132);
  std::vector<double> z(T);
  z[0] = rng.normal() / std::sqrt(1.0 - rho * rho);
  for (std::size_t t = 1; t < T; ++t) z[t] = rho * z[t - 1] + rng.normal();
  return z;
}

struct StatsRecord {
  double mean = 0.0;
  double sd = 0.0;
  double skewness = 0.0;
  double kurtosis = 0.0;         // raw; Gaussian = 3
  double excess_kurtosis = 0.0;  // raw - 3
  double ac1 = 0.0;
  double ac2 = 0.0;
  double ac1_abs_returns = 0.0;  // AC1 of |p_t - p_{t-1}|
  std::optional<double> stockout_frequency;  // only with (pf, z path)
};

// Sample statistics of a price path; undefined statistics on degenerate
// input are reported as NaN rather than errors.
inline StatsRecord price_stats(const PriceSeries& series,
                               const PriceFunctionTable* pf = nullptr,
                               const std::vector<double>* shocks = nullptr) {
  if (series.size() < 3) throw std::invalid_argument("price_stats: length < 3");
  const auto& p = series.values;
  StatsRecord rec;
  rec.mean = storage::mean(p);
  const double var = storage::variance(p);
  rec.sd = var > 0.0 ? std::sqrt(var) : 0.0;
  rec.skewness = storage::skewness(p);
  rec.kurtosis = storage::kurtosis(p);
  rec.excess_kurtosis = rec.kurtosis - 3.0;
  rec.ac1 = autocorrelation(p, 1);
  rec.ac2 = autocorrelation(p, 2);

  std::vector<double> abs_ret(p.size() - 1);
  for (std::size_t t = 1; t < p.size(); ++t) abs_ret[t - 1] = std::fabs(p[t] - p[t - 1]);
  rec.ac1_abs_returns = autocorrelation(abs_ret, 1);

  if (pf && shocks) {
    if (shocks->size() != p.size())
      throw std::invalid_argument("price_stats: shock path length mismatch");
    // For the interpolated table the non-negativity kink lies exactly at a
    // stock node, so the threshold is evaluated at each observed shock state
    // rather than interpolated between shock-node thresholds (which biases
    // the frequency upward).
    std::size_t hits = 0;
    for (std::size_t t = 0; t < p.size(); ++t)
      if (p[t] >= threshold_price(*pf, (*shocks)[t])) ++hits;
    rec.stockout_frequency = double(hits) / double(p.size());
  }
  return rec;
}

}  // namespace storage
