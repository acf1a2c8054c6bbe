#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "storage/rng.hpp"

namespace storage {

namespace detail {

// Iterative radix-2 complex FFT, in place. Length must be a power of two.
inline void fft_radix2(std::vector<std::complex<double>>& a, bool inverse) {
  const std::size_t n = a.size();
  if (n == 0 || (n & (n - 1)) != 0)
    throw std::invalid_argument("fft_radix2: length must be a power of two");
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double ang = 2.0 * M_PI / double(len) * (inverse ? 1.0 : -1.0);
    const std::complex<double> wl(std::cos(ang), std::sin(ang));
    for (std::size_t i = 0; i < n; i += len) {
      std::complex<double> w(1.0, 0.0);
      for (std::size_t k = 0; k < len / 2; ++k) {
        const std::complex<double> u = a[i + k];
        const std::complex<double> v = a[i + k + len / 2] * w;
        a[i + k] = u + v;
        a[i + k + len / 2] = u - v;
        w *= wl;
      }
    }
  }
  if (inverse)
    for (auto& x : a) x /= double(n);
}

}  // namespace detail

// Equal-variance Gaussian mixture to resample from: pi(z) = sum_j w_j N(z; mu_j, s2).
struct MixtureSpec {
  std::vector<double> means;
  std::vector<double> weights;  // must sum to 1
  double variance = 1.0;

  void validate() const {
    if (means.size() != weights.size() || means.empty())
      throw std::invalid_argument("MixtureSpec: size mismatch");
    if (variance <= 0.0) throw std::invalid_argument("MixtureSpec: variance <= 0");
    double s = 0.0;
    for (double w : weights) s += w;
    if (std::fabs(s - 1.0) > 1e-10)
      throw std::invalid_argument("MixtureSpec: weights do not sum to 1");
  }

  double mean() const {
    double m = 0.0;
    for (std::size_t j = 0; j < means.size(); ++j) m += weights[j] * means[j];
    return m;
  }

  double total_variance() const {
    const double m = mean();
    double v = 0.0;
    for (std::size_t j = 0; j < means.size(); ++j)
      v += weights[j] * (means[j] - m) * (means[j] - m);
    return v + variance;
  }
};

// Regular evaluation grid spanning the mixture mean +- 8 standard deviations.
struct ResampleGrid {
  std::size_t n_g = 1024;  // must be a power of two
  double lo = 0.0, hi = 0.0;
  std::vector<double> pdf;
  std::vector<double> cdf;

  double step() const { return (hi - lo) / double(n_g - 1); }
  double node(std::size_t i) const { return lo + double(i) * step(); }
};

inline ResampleGrid make_resample_grid(const MixtureSpec& spec, std::size_t n_g = 1024) {
  if (n_g == 0 || (n_g & (n_g - 1)) != 0)
    throw std::invalid_argument("make_resample_grid: n_g must be a power of two");
  ResampleGrid grid;
  grid.n_g = n_g;
  const double m = spec.mean();
  const double sd = std::sqrt(spec.total_variance());
  grid.lo = m - 8.0 * sd;
  grid.hi = m + 8.0 * sd;
  return grid;
}

// Silverman-style binned kernel density: linear binning of the weighted point
// masses, then convolution with the common Gaussian kernel via FFT on a
// zero-padded grid. Tiny negative ringing is clipped to zero.
inline void mixture_pdf_fft(const MixtureSpec& spec, ResampleGrid& grid) {
  spec.validate();
  const std::size_t n = grid.n_g;
  const double d = grid.step();
  const double sigma = std::sqrt(spec.variance);
  if (sigma < d)
    throw std::invalid_argument("mixture_pdf_fft: kernel support below one grid cell");

  // Linear (two-cell) binning; mass outside the grid clamps to boundary cells.
  std::vector<double> bins(n, 0.0);
  for (std::size_t j = 0; j < spec.means.size(); ++j) {
    const double pos = (spec.means[j] - grid.lo) / d;
    if (pos <= 0.0) {
      bins[0] += spec.weights[j];
    } else if (pos >= double(n - 1)) {
      bins[n - 1] += spec.weights[j];
    } else {
      const std::size_t i = std::size_t(pos);
      const double frac = pos - double(i);
      bins[i] += spec.weights[j] * (1.0 - frac);
      bins[i + 1] += spec.weights[j] * frac;
    }
  }

  // Zero-padded circular convolution with the Gaussian kernel, applied in the
  // frequency domain via the exact characteristic function. Dividing by the
  // linear-binning transform sinc^2(w d / 2) undoes the binning smoothing.
  const std::size_t m = 2 * n;
  std::vector<std::complex<double>> fa(m, 0.0);
  for (std::size_t i = 0; i < n; ++i) fa[i] = bins[i];
  detail::fft_radix2(fa, false);
  for (std::size_t k = 0; k < m; ++k) {
    const double freq = k <= m / 2 ? double(k) : double(k) - double(m);
    const double w = 2.0 * M_PI * freq / (double(m) * d);
    const double half = 0.5 * w * d;
    const double sinc = half == 0.0 ? 1.0 : std::sin(half) / half;
    fa[k] *= std::exp(-0.5 * sigma * sigma * w * w) / (sinc * sinc);
  }
  detail::fft_radix2(fa, true);

  grid.pdf.resize(n);
  for (std::size_t i = 0; i < n; ++i) grid.pdf[i] = std::max(fa[i].real() / d, 0.0);
}

// Mid-point rule CDF over the grid cells, renormalized to end exactly at 1.
inline void mixture_cdf(ResampleGrid& grid) {
  if (grid.pdf.size() != grid.n_g)
    throw std::invalid_argument("mixture_cdf: pdf not computed");
  const double d = grid.step();
  grid.cdf.resize(grid.n_g);
  double cum = 0.0;
  for (std::size_t i = 0; i < grid.n_g; ++i) {
    // Each node owns a cell of width d; CDF at the node sits mid-cell.
    grid.cdf[i] = cum + 0.5 * grid.pdf[i] * d;
    cum += grid.pdf[i] * d;
  }
  if (cum <= 0.0) throw std::runtime_error("mixture_cdf: zero total mass");
  const double scale = 1.0 / grid.cdf.back();
  for (double& c : grid.cdf) c = std::min(c * scale, 1.0);
}

// Stratified inverse-CDF sampling: u_j = (j - 1 + u~_j)/N with iid u~. The
// uniforms are ascending by construction, so a single forward pass over the
// grid suffices: O(N + n_g). Output is sorted ascending.
inline std::vector<double> stratified_inverse_sample(const ResampleGrid& grid,
                                                     std::size_t n, Rng& rng) {
  if (grid.cdf.size() != grid.n_g)
    throw std::invalid_argument("stratified_inverse_sample: cdf not computed");
  std::vector<double> draws(n);
  std::size_t cell = 0;
  for (std::size_t j = 0; j < n; ++j) {
    const double u = (double(j) + rng.uniform()) / double(n);
    while (cell + 1 < grid.n_g && grid.cdf[cell + 1] < u) ++cell;
    const double c0 = grid.cdf[cell];
    const double c1 = cell + 1 < grid.n_g ? grid.cdf[cell + 1] : 1.0;
    double frac = c1 > c0 ? (u - c0) / (c1 - c0) : 0.0;
    frac = std::clamp(frac, 0.0, 1.0);
    draws[j] = grid.node(cell) + frac * grid.step();
  }
  return draws;
}

// Convenience wrapper: full Appendix-A pipeline for one mixture.
inline std::vector<double> resample_mixture(const MixtureSpec& spec, std::size_t n,
                                            Rng& rng, std::size_t n_g = 1024) {
  ResampleGrid grid = make_resample_grid(spec, n_g);
  mixture_pdf_fft(spec, grid);
  mixture_cdf(grid);
  return stratified_inverse_sample(grid, n, rng);
}

}  // namespace storage
