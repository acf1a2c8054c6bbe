#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include "storage/rng.hpp"

namespace storage {

inline constexpr double kLog2Pi = 1.8378770664093454836;

inline double norm_pdf(double x, double mu = 0.0, double var = 1.0) {
  const double d = x - mu;
  return std::exp(-0.5 * d * d / var) / std::sqrt(2.0 * M_PI * var);
}

inline double log_norm_pdf(double x, double mu, double var) {
  const double d = x - mu;
  return -0.5 * (d * d / var + std::log(var) + kLog2Pi);
}

inline double norm_cdf(double x, double mu = 0.0, double var = 1.0) {
  return 0.5 * std::erfc(-(x - mu) / std::sqrt(2.0 * var));
}

// Regularized upper incomplete gamma Q(a, x), by series or continued fraction.
inline double gamma_q(double a, double x) {
  if (x < 0.0 || a <= 0.0) throw std::domain_error("gamma_q: bad arguments");
  if (x == 0.0) return 1.0;
  const double gln = std::lgamma(a);
  if (x < a + 1.0) {
    // P(a,x) by series, return 1 - P.
    double ap = a, sum = 1.0 / a, del = sum;
    for (int n = 0; n < 500; ++n) {
      ap += 1.0;
      del *= x / ap;
      sum += del;
      if (std::fabs(del) < std::fabs(sum) * 1e-16) break;
    }
    return 1.0 - sum * std::exp(-x + a * std::log(x) - gln);
  }
  // Q(a,x) by Lentz continued fraction.
  const double tiny = 1e-300;
  double b = x + 1.0 - a, c = 1.0 / tiny, d = 1.0 / b, h = d;
  for (int i = 1; i < 500; ++i) {
    const double an = -i * (i - a);
    b += 2.0;
    d = an * d + b;
    if (std::fabs(d) < tiny) d = tiny;
    c = b + an / c;
    if (std::fabs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double delta = d * c;
    h *= delta;
    if (std::fabs(delta - 1.0) < 1e-16) break;
  }
  return std::exp(-x + a * std::log(x) - gln) * h;
}

inline double chi2_sf(double q, double dof) { return gamma_q(0.5 * dof, 0.5 * q); }

// Kolmogorov distribution survival function Q(lambda).
inline double kolmogorov_sf(double lambda) {
  if (lambda < 1e-3) return 1.0;
  double sum = 0.0;
  for (int j = 1; j <= 100; ++j) {
    const double term = std::exp(-2.0 * j * j * lambda * lambda);
    sum += (j % 2 ? term : -term);
    if (term < 1e-16) break;
  }
  return std::clamp(2.0 * sum, 0.0, 1.0);
}

// One-sample KS test against the standard normal, Stephens' small-sample form.
inline double ks_test_normal_pvalue(std::vector<double> x) {
  const std::size_t n = x.size();
  if (n < 2) return std::numeric_limits<double>::quiet_NaN();
  std::sort(x.begin(), x.end());
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double f = norm_cdf(x[i]);
    d = std::max(d, std::fabs(f - double(i) / n));
    d = std::max(d, std::fabs(double(i + 1) / n - f));
  }
  const double rn = std::sqrt(double(n));
  return kolmogorov_sf(d * (rn + 0.12 + 0.11 / rn));
}

inline double mean(std::span<const double> x) {
  return std::accumulate(x.begin(), x.end(), 0.0) / double(x.size());
}

inline double variance(std::span<const double> x) {
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / double(x.size() - 1);
}

inline double central_moment(std::span<const double> x, int k) {
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += std::pow(v - m, k);
  return s / double(x.size());
}

inline double skewness(std::span<const double> x) {
  const double m2 = central_moment(x, 2);
  if (m2 <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  return central_moment(x, 3) / std::pow(m2, 1.5);
}

// Raw kurtosis; Gaussian = 3.
inline double kurtosis(std::span<const double> x) {
  const double m2 = central_moment(x, 2);
  if (m2 <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  return central_moment(x, 4) / (m2 * m2);
}

inline double autocorrelation(std::span<const double> x, std::size_t lag) {
  const std::size_t n = x.size();
  if (n <= lag + 1) return std::numeric_limits<double>::quiet_NaN();
  const double m = mean(x);
  double num = 0.0, den = 0.0;
  for (std::size_t t = 0; t < n; ++t) den += (x[t] - m) * (x[t] - m);
  for (std::size_t t = lag; t < n; ++t) num += (x[t] - m) * (x[t - lag] - m);
  if (den <= 0.0) return std::numeric_limits<double>::quiet_NaN();
  return num / den;
}

// Smallest value whose cumulative normalized weight reaches 1/2.
inline double weighted_median(std::span<const double> values,
                              std::span<const double> weights) {
  if (values.size() != weights.size() || values.empty())
    throw std::invalid_argument("weighted_median: size mismatch");
  std::vector<std::size_t> idx(values.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  const double total = std::accumulate(weights.begin(), weights.end(), 0.0);
  double cum = 0.0;
  for (std::size_t i : idx) {
    cum += weights[i];
    if (cum >= 0.5 * total) return values[i];
  }
  return values[idx.back()];
}

}  // namespace storage
