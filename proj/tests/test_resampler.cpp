#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "storage/resampler.hpp"
#include "storage/rng.hpp"

using namespace storage;

namespace {

// Independent Gaussian CDF oracle via the error function.
double phi_cdf(double x, double mu, double sd) {
  return 0.5 * std::erfc(-(x - mu) / (sd * std::sqrt(2.0)));
}

double mixture_cdf_exact(const MixtureSpec& spec, double x) {
  const double sd = std::sqrt(spec.variance);
  double c = 0.0;
  for (std::size_t j = 0; j < spec.means.size(); ++j)
    c += spec.weights[j] * phi_cdf(x, spec.means[j], sd);
  return c;
}

double ks_distance(const std::vector<double>& sorted_draws,
                   const MixtureSpec& spec) {
  const std::size_t n = sorted_draws.size();
  double d = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double c = mixture_cdf_exact(spec, sorted_draws[i]);
    d = std::max(d, std::fabs(c - double(i) / double(n)));
    d = std::max(d, std::fabs(c - double(i + 1) / double(n)));
  }
  return d;
}

}  // namespace

TEST_CASE("single gaussian pdf on the grid") {
  MixtureSpec spec;
  spec.means = {0.0};
  spec.weights = {1.0};
  spec.variance = 1.0;

  ResampleGrid grid = make_resample_grid(spec, 1024);
  CHECK(grid.lo == Catch::Approx(-8.0));
  CHECK(grid.hi == Catch::Approx(8.0));

  mixture_pdf_fft(spec, grid);
  double sup = 0.0;
  for (std::size_t i = 0; i < grid.n_g; ++i) {
    const double x = grid.node(i);
    const double exact = std::exp(-0.5 * x * x) / std::sqrt(2.0 * M_PI);
    sup = std::max(sup, std::fabs(grid.pdf[i] - exact));
  }
  // The binned construction leaves a small residual after the frequency-
  // domain correction; realised sup error at 1024 grid points is ~4e-6.
  CHECK(sup < 1e-5);

  // Total mass by the trapezoid rule.
  double mass = 0.0;
  for (std::size_t i = 0; i + 1 < grid.n_g; ++i)
    mass += 0.5 * (grid.pdf[i] + grid.pdf[i + 1]) * grid.step();
  CHECK(mass == Catch::Approx(1.0).margin(1e-6));
}

TEST_CASE("symmetric two-component mixture") {
  MixtureSpec spec;
  spec.means = {-2.0, 2.0};
  spec.weights = {0.5, 0.5};
  spec.variance = 0.7;

  ResampleGrid grid = make_resample_grid(spec, 1024);
  mixture_pdf_fft(spec, grid);
  for (std::size_t i = 0; i < grid.n_g; ++i)
    CHECK(grid.pdf[i] ==
          Catch::Approx(grid.pdf[grid.n_g - 1 - i]).margin(1e-10));

  mixture_cdf(grid);
  CHECK(grid.cdf.back() == Catch::Approx(1.0).epsilon(1e-14));
  for (std::size_t i = 1; i < grid.n_g; ++i) CHECK(grid.cdf[i] >= grid.cdf[i - 1]);

  // CDF at the center of symmetry.
  const std::size_t mid = grid.n_g / 2;
  const double frac = (0.0 - grid.node(mid - 1)) / grid.step();
  const double c0 = grid.cdf[mid - 1] + frac * (grid.cdf[mid] - grid.cdf[mid - 1]);
  CHECK(c0 == Catch::Approx(0.5).margin(1e-6));
}

TEST_CASE("single gaussian cdf against the error function") {
  MixtureSpec spec;
  spec.means = {1.3};
  spec.weights = {1.0};
  spec.variance = 2.25;
  ResampleGrid grid = make_resample_grid(spec, 1024);
  mixture_pdf_fft(spec, grid);
  mixture_cdf(grid);
  double sup = 0.0;
  for (std::size_t i = 0; i < grid.n_g; ++i)
    sup = std::max(sup, std::fabs(grid.cdf[i] - phi_cdf(grid.node(i), 1.3, 1.5)));
  CHECK(sup < 1e-5);
}

TEST_CASE("stratified sampling determinism and order") {
  MixtureSpec spec;
  spec.means = {-1.0, 0.5, 2.0};
  spec.weights = {0.3, 0.5, 0.2};
  spec.variance = 1.0;

  Rng r1(77, 1), r2(77, 1);
  const std::vector<double> d1 = resample_mixture(spec, 4096, r1);
  const std::vector<double> d2 = resample_mixture(spec, 4096, r2);
  CHECK(d1 == d2);
  CHECK(std::is_sorted(d1.begin(), d1.end()));

  // Sample moments against the analytic mixture values.
  const double m = spec.mean();
  const double v = spec.total_variance();
  double sm = 0.0, sv = 0.0;
  for (double x : d1) sm += x;
  sm /= double(d1.size());
  for (double x : d1) sv += (x - sm) * (x - sm);
  sv /= double(d1.size() - 1);
  CHECK(sm == Catch::Approx(m).margin(4.0 * std::sqrt(v / double(d1.size()))));
  CHECK(sv == Catch::Approx(v).margin(0.15 * v));
}

TEST_CASE("kolmogorov-smirnov battery over random mixtures") {
  Rng meta(2024, 5);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t sizes[3] = {1, 10, 4096};
    const std::size_t nc = sizes[rep % 3];
    MixtureSpec spec;
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

    Rng r(900 + rep, 1);
    const std::vector<double> draws = resample_mixture(spec, 1u << 16, r);
    CHECK(ks_distance(draws, spec) < 0.01);
  }
}

TEST_CASE("continuity of sampled quantiles in the mixture means") {
  MixtureSpec spec;
  spec.means = {-0.7, 0.1, 1.9};
  spec.weights = {0.2, 0.5, 0.3};
  spec.variance = 1.0;
  const double h = 1e-3;
  MixtureSpec shifted = spec;
  for (auto& m : shifted.means) m += h;

  Rng r1(4242, 3), r2(4242, 3);
  const std::vector<double> a = resample_mixture(spec, 8192, r1);
  const std::vector<double> b = resample_mixture(shifted, 8192, r2);
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    worst = std::max(worst, std::fabs(b[i] - a[i] - h));
  CHECK(worst < 1e-4);
}

TEST_CASE("grid too coarse for the kernel is rejected") {
  MixtureSpec spec;
  spec.means = {0.0};
  spec.weights = {1.0};
  spec.variance = 1.0;
  ResampleGrid grid = make_resample_grid(spec, 1024);
  ResampleGrid coarse = grid;
  coarse.n_g = 16;
  coarse.pdf.clear();
  coarse.cdf.clear();
  CHECK_THROWS(mixture_pdf_fft(spec, coarse));
}
