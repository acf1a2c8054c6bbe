#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <vector>

#include "storage/nelder_mead.hpp"
#include "storage/params.hpp"
#include "storage/stats.hpp"

namespace storage {

// Linear AR(1): p_{t+1} = a + rho (p_t - a) + b e_{t+1}, b the innovation
// scale (reported negative to match the structural model's sign convention).
struct Ar1Params {
  double rho = 0.0, a = 0.0, b = -1.0;
};

struct Ar1Fit {
  Ar1Params params;
  double loglik = 0.0;
  std::array<double, 3> std_errors{};  // observed-Fisher, (rho, a, b)
};

inline double ar1_loglik(const Ar1Params& q, const std::vector<double>& p) {
  const double var = q.b * q.b;
  double ll = 0.0;
  for (std::size_t t = 0; t + 1 < p.size(); ++t)
    ll += log_norm_pdf(p[t + 1], q.a + q.rho * (p[t] - q.a), var);
  return ll;
}

// Exact conditional (on p_1) Gaussian ML: OLS of p_{t+1} on p_t.
inline Ar1Fit fit_ar1(const PriceSeries& series) {
  const auto& p = series.values;
  const std::size_t n = p.size();
  if (n < 3) throw std::invalid_argument("fit_ar1: length < 3");
  const std::size_t m = n - 1;
  double sx = 0.0, sy = 0.0;
  for (std::size_t t = 0; t < m; ++t) {
    sx += p[t];
    sy += p[t + 1];
  }
  const double mx = sx / double(m), my = sy / double(m);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t t = 0; t < m; ++t) {
    sxx += (p[t] - mx) * (p[t] - mx);
    sxy += (p[t] - mx) * (p[t + 1] - my);
  }
  Ar1Fit fit;
  fit.params.rho = sxx > 0.0 ? sxy / sxx : 0.0;
  const double intercept = my - fit.params.rho * mx;
  fit.params.a = std::fabs(1.0 - fit.params.rho) > 1e-12
                     ? intercept / (1.0 - fit.params.rho)
                     : my;
  double ssr = 0.0;
  for (std::size_t t = 0; t < m; ++t) {
    const double e = p[t + 1] - intercept - fit.params.rho * p[t];
    ssr += e * e;
  }
  fit.params.b = -std::sqrt(ssr / double(m));  // ML variance, conditional on p_1
  fit.loglik = ar1_loglik(fit.params, p);

  // Observed Fisher standard errors from a central-difference Hessian.
  {
    const std::array<double, 3> x0{fit.params.rho, fit.params.a, fit.params.b};
    const auto ll = [&](const std::array<double, 3>& x) {
      return ar1_loglik({x[0], x[1], x[2]}, p);
    };
    std::array<std::array<double, 3>, 3> hess{};
    const double h = 1e-4;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        auto xpp = x0, xpm = x0, xmp = x0, xmm = x0;
        xpp[i] += h; xpp[j] += h;
        xpm[i] += h; xpm[j] -= h;
        xmp[i] -= h; xmp[j] += h;
        xmm[i] -= h; xmm[j] -= h;
        hess[i][j] = (ll(xpp) - ll(xpm) - ll(xmp) + ll(xmm)) / (4.0 * h * h);
      }
    // Invert the 3x3 negative Hessian.
    std::array<std::array<double, 3>, 3> a{};
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) a[i][j] = -hess[i][j];
    const double det =
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1]) -
        a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0]) +
        a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0]);
    if (std::fabs(det) > 1e-300) {
      fit.std_errors[0] = std::sqrt(std::max(
          (a[1][1] * a[2][2] - a[1][2] * a[2][1]) / det, 0.0));
      fit.std_errors[1] = std::sqrt(std::max(
          (a[0][0] * a[2][2] - a[0][2] * a[2][0]) / det, 0.0));
      fit.std_errors[2] = std::sqrt(std::max(
          (a[0][0] * a[1][1] - a[0][1] * a[1][0]) / det, 0.0));
    }
  }
  return fit;
}

// AR(1)-GARCH(1,1): sigma_t^2 = alpha0 + alpha1 e_{t-1}^2 + beta1 sigma_{t-1}^2,
// sigma_1^2 initialized at the unconditional variance.
struct GarchParams {
  double rho = 0.0, a = 0.0;
  double alpha0 = 1e-4, alpha1 = 0.05, beta1 = 0.9;
};

struct GarchFit {
  GarchParams params;
  double loglik = -std::numeric_limits<double>::infinity();
  bool converged = false;
};

inline double garch_loglik(const GarchParams& q, const std::vector<double>& p) {
  const double persist = q.alpha1 + q.beta1;
  if (q.alpha0 <= 0.0 || q.alpha1 < 0.0 || q.beta1 < 0.0 || persist >= 1.0)
    return -std::numeric_limits<double>::infinity();
  double s2 = q.alpha0 / (1.0 - persist);
  double ll = 0.0, e_prev = 0.0;
  for (std::size_t t = 0; t + 1 < p.size(); ++t) {
    if (t > 0) s2 = q.alpha0 + q.alpha1 * e_prev * e_prev + q.beta1 * s2;
    const double e = p[t + 1] - q.a - q.rho * (p[t] - q.a);
    ll += log_norm_pdf(p[t + 1], q.a + q.rho * (p[t] - q.a), s2);
    e_prev = e;
  }
  return ll;
}

namespace detail_bench {

// (rho, a, persistence u, split v, alpha0) <-> unconstrained 5-vector.
inline GarchParams garch_from_vec(const std::vector<double>& x) {
  GarchParams q;
  q.rho = std::tanh(x[0]);
  q.a = x[1];
  const double u = (1.0 - 1e-8) / (1.0 + std::exp(-x[2]));
  const double v = 1.0 / (1.0 + std::exp(-x[3]));
  q.alpha1 = u * v;
  q.beta1 = u * (1.0 - v);
  q.alpha0 = std::exp(x[4]);
  return q;
}

inline std::vector<double> garch_to_vec(const GarchParams& q) {
  const double u = std::clamp(q.alpha1 + q.beta1, 1e-8, 1.0 - 1e-8);
  const double v = std::clamp(q.alpha1 / u, 1e-8, 1.0 - 1e-8);
  return {std::atanh(q.rho), q.a, std::log(u / (1.0 - u)),
          std::log(v / (1.0 - v)), std::log(q.alpha0)};
}

}  // namespace detail_bench

inline GarchFit fit_garch(const PriceSeries& series) {
  const auto& p = series.values;
  if (p.size() < 30) throw std::invalid_argument("fit_garch: length < 30");
  const Ar1Fit ar1 = fit_ar1(series);
  const double resid_var = ar1.params.b * ar1.params.b;

  // Two starts: a near-homoskedastic one at the AR(1) optimum (guarantees the
  // nested fit is never beaten by its special case) and a persistent one.
  std::vector<GarchParams> starts;
  starts.push_back({ar1.params.rho, ar1.params.a, resid_var * (1.0 - 1e-6 - 1e-4),
                    1e-6, 1e-4});
  starts.push_back({ar1.params.rho, ar1.params.a, 0.15 * resid_var, 0.10, 0.75});

  GarchFit best;
  for (const auto& s : starts) {
    const auto obj = [&](const std::vector<double>& x) {
      return garch_loglik(detail_bench::garch_from_vec(x), p);
    };
    const NelderMeadResult r = nelder_mead_maximize(obj, detail_bench::garch_to_vec(s));
    if (r.value > best.loglik) {
      best.params = detail_bench::garch_from_vec(r.x);
      best.loglik = r.value;
      best.converged = r.converged;
    }
  }
  return best;
}

// Two-regime Markov-switching AR(1) with constant transition probabilities.
// Hamilton filter with the ergodic initial regime distribution; regimes are
// ordered by intercept a after fitting.
struct MsAr1Params {
  std::array<double, 2> rho{}, a{}, b{};
  double p11 = 0.95;  // P(regime 1 | regime 1)
  double p21 = 0.05;  // P(regime 1 | regime 2)
};

struct MsAr1Fit {
  MsAr1Params params;
  double loglik = -std::numeric_limits<double>::infinity();
  std::vector<double> regime1_probability;  // filtered, per transition
  bool converged = false;
};

inline double ms_ar1_filter(const MsAr1Params& q, const std::vector<double>& p,
                            std::vector<double>* prob1_out = nullptr) {
  if (q.p11 <= 0.0 || q.p11 >= 1.0 || q.p21 <= 0.0 || q.p21 >= 1.0)
    return -std::numeric_limits<double>::infinity();
  // Ergodic distribution of the 2-state chain.
  const double pi1 = q.p21 / (1.0 - q.p11 + q.p21);
  double xi1 = pi1, xi2 = 1.0 - pi1;
  double ll = 0.0;
  if (prob1_out) prob1_out->clear();
  for (std::size_t t = 0; t + 1 < p.size(); ++t) {
    // One-step-ahead regime probabilities.
    const double pred1 = q.p11 * xi1 + q.p21 * xi2;
    const double pred2 = 1.0 - pred1;
    const double d1 = norm_pdf(p[t + 1], q.a[0] + q.rho[0] * (p[t] - q.a[0]),
                               q.b[0] * q.b[0]);
    const double d2 = norm_pdf(p[t + 1], q.a[1] + q.rho[1] * (p[t] - q.a[1]),
                               q.b[1] * q.b[1]);
    const double lt = pred1 * d1 + pred2 * d2;
    if (!(lt > 0.0) || !std::isfinite(lt))
      return -std::numeric_limits<double>::infinity();
    ll += std::log(lt);
    xi1 = pred1 * d1 / lt;
    xi2 = pred2 * d2 / lt;
    if (prob1_out) prob1_out->push_back(xi1);
  }
  return ll;
}

namespace detail_bench {

inline MsAr1Params ms_from_vec(const std::vector<double>& x) {
  MsAr1Params q;
  for (int k = 0; k < 2; ++k) {
    q.rho[k] = std::tanh(x[3 * k]);
    q.a[k] = x[3 * k + 1];
    q.b[k] = -std::exp(x[3 * k + 2]);
  }
  q.p11 = 1.0 / (1.0 + std::exp(-x[6]));
  q.p21 = 1.0 / (1.0 + std::exp(-x[7]));
  return q;
}

inline std::vector<double> ms_to_vec(const MsAr1Params& q) {
  return {std::atanh(q.rho[0]), q.a[0], std::log(-q.b[0]),
          std::atanh(q.rho[1]), q.a[1], std::log(-q.b[1]),
          std::log(q.p11 / (1.0 - q.p11)), std::log(q.p21 / (1.0 - q.p21))};
}

}  // namespace detail_bench

inline MsAr1Fit fit_ms_ar1(const PriceSeries& series) {
  const auto& p = series.values;
  if (p.size() < 30) throw std::invalid_argument("fit_ms_ar1: length < 30");
  const Ar1Fit ar1 = fit_ar1(series);
  const double scale = -ar1.params.b;

  std::vector<MsAr1Params> starts;
  // Near-degenerate start at the AR(1) optimum (nesting guarantee).
  {
    MsAr1Params s;
    s.rho = {ar1.params.rho, ar1.params.rho};
    s.a = {ar1.params.a - 1e-4, ar1.params.a + 1e-4};
    s.b = {ar1.params.b, ar1.params.b};
    s.p11 = 0.95;
    s.p21 = 0.05;
    starts.push_back(s);
  }
  // Separated-regime starts.
  for (double spread : {0.3, 0.8}) {
    MsAr1Params s;
    s.rho = {ar1.params.rho, ar1.params.rho};
    s.a = {ar1.params.a * (1.0 - spread), ar1.params.a * (1.0 + spread)};
    s.b = {-0.7 * scale, -1.5 * scale};
    s.p11 = 0.95;
    s.p21 = 0.10;
    starts.push_back(s);
  }
  // Data-driven start: split the observations into two level clusters
  // (two-means on the series values) and fit each cluster separately.
  {
    double c0 = *std::min_element(p.begin(), p.end());
    double c1 = *std::max_element(p.begin(), p.end());
    std::vector<int> lab(p.size(), 0);
    for (int it = 0; it < 25; ++it) {
      double s0 = 0.0, s1 = 0.0;
      std::size_t n0 = 0, n1 = 0;
      for (std::size_t t = 0; t < p.size(); ++t) {
        lab[t] = std::fabs(p[t] - c1) < std::fabs(p[t] - c0);
        (lab[t] ? s1 : s0) += p[t];
        (lab[t] ? n1 : n0) += 1;
      }
      if (n0 == 0 || n1 == 0) break;
      c0 = s0 / double(n0);
      c1 = s1 / double(n1);
    }
    std::size_t n0 = std::count(lab.begin(), lab.end(), 0);
    if (n0 >= 10 && p.size() - n0 >= 10) {
      MsAr1Params s;
      std::size_t stay0 = 0, from0 = 0, stay1 = 0, from1 = 0;
      for (std::size_t t = 0; t + 1 < p.size(); ++t) {
        (lab[t] == 0 ? from0 : from1) += 1;
        if (lab[t] == 0 && lab[t + 1] == 0) ++stay0;
        if (lab[t] == 1 && lab[t + 1] == 1) ++stay1;
      }
      for (int k = 0; k < 2; ++k) {
        double sum = 0.0, sq = 0.0;
        std::size_t nk = 0;
        for (std::size_t t = 0; t < p.size(); ++t)
          if (lab[t] == k) {
            sum += p[t];
            sq += p[t] * p[t];
            ++nk;
          }
        const double m = sum / double(nk);
        const double v = std::max(sq / double(nk) - m * m, 1e-6);
        s.rho[k] = 0.5 * ar1.params.rho;
        s.a[k] = m;
        s.b[k] = -std::sqrt(v);
      }
      const auto clampp = [](double v) { return std::min(std::max(v, 0.02), 0.98); };
      s.p11 = clampp(double(stay0) / std::max<std::size_t>(from0, 1));
      s.p21 = 1.0 - clampp(double(stay1) / std::max<std::size_t>(from1, 1));
      s.p21 = std::min(std::max(s.p21, 0.02), 0.98);
      starts.push_back(s);
    }
  }

  MsAr1Fit best;
  const auto obj = [&](const std::vector<double>& x) {
    return ms_ar1_filter(detail_bench::ms_from_vec(x), p);
  };
  for (const auto& s : starts) {
    // A restart from the incumbent helps the simplex escape the collapsed
    // shapes it tends to reach in eight dimensions.
    std::vector<double> x = detail_bench::ms_to_vec(s);
    NelderMeadResult r;
    for (int round = 0; round < 3; ++round) {
      const NelderMeadResult rr = nelder_mead_maximize(obj, x);
      if (round > 0 && rr.value <= r.value + 1e-6) {
        break;
      }
      r = rr;
      x = rr.x;
    }
    if (r.value > best.loglik) {
      best.params = detail_bench::ms_from_vec(r.x);
      best.loglik = r.value;
      best.converged = r.converged;
    }
  }
  // Label-switching convention: regime 1 has the smaller intercept.
  if (best.params.a[0] > best.params.a[1]) {
    std::swap(best.params.a[0], best.params.a[1]);
    std::swap(best.params.rho[0], best.params.rho[1]);
    std::swap(best.params.b[0], best.params.b[1]);
    const double q12 = 1.0 - best.params.p11, q22 = 1.0 - best.params.p21;
    // Relabeled transition probabilities: new p11 = old p22, new p21 = old p12.
    best.params.p11 = q22;
    best.params.p21 = q12;
  }
  ms_ar1_filter(best.params, p, &best.regime1_probability);
  return best;
}

}  // namespace storage
