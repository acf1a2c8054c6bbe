#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace storage {

// Structural parameter vector (rho, a, b, delta) plus the fixed per-period
// interest rate r. The discount factor beta = (1-delta)/(1+r) is always
// derived, never stored.
struct StructuralParams {
  double rho = 0.0;    // AR(1) coefficient of the supply shock
  double a = 0.0;      // demand intercept
  double b = -1.0;     // demand slope, negative
  double delta = 0.0;  // per-period depreciation rate in [0,1]
  double r = 0.0;      // per-period real interest rate, not estimated

  double beta() const { return (1.0 - delta) / (1.0 + r); }

  bool valid() const {
    return std::fabs(rho) < 1.0 && b < 0.0 && delta >= 0.0 && delta <= 1.0 &&
           r > 0.0 && beta() < 1.0 && std::isfinite(a);
  }

  void validate() const {
    if (!valid()) throw std::invalid_argument("StructuralParams: invariants violated");
  }
};

// Consumer inverse demand P(z) = a + b z and its inverse.
inline double demand_price(double quantity, const StructuralParams& p) {
  return p.a + p.b * quantity;
}

inline double inverse_demand(double price, const StructuralParams& p) {
  return (price - p.a) / p.b;
}

// Per-period rate from an annual rate under geometric compounding.
inline double period_rate(double annual_rate, int periods_per_year) {
  if (annual_rate <= -1.0) throw std::domain_error("period_rate: annual_rate <= -1");
  if (periods_per_year < 1) throw std::domain_error("period_rate: periods_per_year < 1");
  return std::pow(1.0 + annual_rate, 1.0 / double(periods_per_year)) - 1.0;
}

enum class ShockKind { StandardGaussian, ScaledStudentT };

struct ShockDistribution {
  ShockKind kind = ShockKind::StandardGaussian;
  double dof = 4.0;  // only used for student-t; scaled to unit variance

  void validate() const {
    if (kind == ShockKind::ScaledStudentT && dof <= 2.0)
      throw std::invalid_argument("ShockDistribution: student-t needs dof > 2");
  }
};

// Observed or simulated price path. Normalization to unit mean records the
// pre-normalization mean so raw prices can be recovered.
struct PriceSeries {
  std::vector<double> values;
  int periods_per_year = 12;
  double normalization_factor = 1.0;
  std::vector<std::string> dates;  // optional, aligned with values when present

  std::size_t size() const { return values.size(); }

  void normalize_to_unit_mean() {
    if (values.size() < 2) throw std::invalid_argument("PriceSeries: length < 2");
    double m = 0.0;
    for (double v : values) {
      if (!std::isfinite(v)) throw std::invalid_argument("PriceSeries: non-finite value");
      m += v;
    }
    m /= double(values.size());
    if (m == 0.0) throw std::invalid_argument("PriceSeries: zero mean");
    for (double& v : values) v /= m;
    normalization_factor *= m;
  }
};

}  // namespace storage
