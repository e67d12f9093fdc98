#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "sigdelta/spectra.hpp"

using namespace sigdelta;
using oracle::pi;

namespace {

std::vector<double> random_taps(std::mt19937_64& rng, std::size_t p) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<double> c(p);
  for (double& x : c) x = u(rng);
  return c;
}

std::vector<double> triangle_weight(const FrequencyGrid& grid, double L) {
  std::vector<double> w(grid.size(), 0.0);
  for (std::size_t m = 0; m < grid.size(); ++m) {
    const double a = std::abs(grid.omega(m));
    if (a <= pi / L) w[m] = 2.0 * a / pi;
  }
  return w;
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("sigdelta_" + name)).string();
}

}  // namespace

TEST_CASE("BandSpec validates its fields") {
  CHECK_THROWS_AS(BandSpec(0.5, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(BandSpec(2.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(BandSpec(2.0, -1.0), std::invalid_argument);
  const BandSpec s(3.0, 2.5);
  CHECK(s.band_edge() == doctest::Approx(pi / 3.0));
  // Flat PSD of height L sigma2 over a band of width 2 pi / L integrates to sigma2.
  CHECK(s.flat_level() * (2.0 * pi / 3.0) / (2.0 * pi) == doctest::Approx(2.5).epsilon(1e-15));
}

TEST_CASE("FrequencyGrid layout") {
  CHECK_THROWS(FrequencyGrid(100));
  CHECK_THROWS(FrequencyGrid(8));
  const FrequencyGrid g(64);
  CHECK(g.omega(0) == -pi);
  CHECK(g.omega(32) == 0.0);
  CHECK(g.mirror(0) == 0);
  CHECK(g.mirror(10) == 54);
}

TEST_CASE("sinc") {
  CHECK(sinc(0.0) == 1.0);
  for (int k = 1; k <= 50; ++k) {
    CHECK(sinc(k) == 0.0);
    CHECK(sinc(-k) == 0.0);
  }
  for (double x : {1e-5, 3e-5, 9.9e-5, 1.01e-4, 0.3, 0.5, 2.7}) {
    const long double px = std::numbers::pi_v<long double> * x;
    const double ref = static_cast<double>(std::sin(px) / px);
    CHECK(sinc(x) == doctest::Approx(ref).epsilon(1e-15));
  }
}

TEST_CASE("flat_band_autocorr examples") {
  const BandSpec s(2.0, 1.0);
  CHECK(flat_band_autocorr(s, 0L) == 1.0);
  CHECK(flat_band_autocorr(s, 2L) == 0.0);
  CHECK(flat_band_autocorr(s, 1L) == doctest::Approx(0.636620).epsilon(1e-6));
  CHECK(flat_band_autocorr(s, 1L) == doctest::Approx(oracle::flat_autocorr(2.0, 1.0, 1)).epsilon(1e-12));
}

TEST_CASE("flat_band_autocorr matches the quadrature oracle and is symmetric") {
  for (double L : {1.0, 1.5, 2.0, 3.0, 4.0, 8.0}) {
    const BandSpec s(L, 1.7);
    const auto r = flat_band_autocorr(s, std::size_t{12});
    for (long k = 0; k <= 12; ++k) {
      CHECK(r[static_cast<std::size_t>(k)] == flat_band_autocorr(s, k));
      CHECK(flat_band_autocorr(s, k) == flat_band_autocorr(s, -k));
      CHECK(std::abs(flat_band_autocorr(s, k) - oracle::flat_autocorr(L, 1.7, k)) < 1e-11);
    }
  }
}

TEST_CASE("grid quadrature of the flat PSD reproduces the closed form within 1e-9 for |k| <= 64") {
  const FrequencyGrid grid;
  const auto unit = FrequencyWeight::unit(grid);
  for (double L : {1.0, 2.0, 3.0, 4.0, 2.5, 7.3}) {
    const BandSpec s(L, 1.0);
    const auto quad = weighted_band_autocorr(grid, s, unit, std::size_t{64});
    double worst = 0.0;
    for (long k = 0; k <= 64; ++k)
      worst = std::max(worst, std::abs(quad[static_cast<std::size_t>(k)] - flat_band_autocorr(s, k)));
    INFO("L = " << L);
    CHECK(worst < 1e-9);
  }
}

TEST_CASE("weighted_band_autocorr examples") {
  const FrequencyGrid grid;
  const BandSpec s(2.0, 1.0);
  const FrequencyWeight tri(triangle_weight(grid, 2.0));
  CHECK(weighted_band_autocorr(grid, s, tri, 0L) == doctest::Approx(0.5).epsilon(1e-10));
  const double r1 = oracle::band_integral([](double w) { return 2.0 * (2.0 * std::abs(w) / pi) * std::cos(w); }, 2.0);
  CHECK(weighted_band_autocorr(grid, s, tri, 1L) == doctest::Approx(r1).epsilon(1e-9));
  CHECK(weighted_band_autocorr(grid, s, tri, 3L) == weighted_band_autocorr(grid, s, tri, -3L));

  const FrequencyWeight zero(std::vector<double>(grid.size(), 0.0));
  CHECK(weighted_band_autocorr(grid, s, zero, 0L) == 0.0);
  CHECK(zero.vanishes_on_band(2.0));
  CHECK_FALSE(tri.vanishes_on_band(2.0));

  const FrequencyWeight small(std::vector<double>(1024, 1.0));
  CHECK_THROWS_AS(weighted_band_autocorr(grid, s, small, 0L), std::invalid_argument);
}

TEST_CASE("grid functions enforce nonnegativity and symmetry") {
  std::vector<double> v(64, 1.0);
  v[3] = -0.1;
  CHECK_THROWS_AS(Psd{v}, std::invalid_argument);
  v[3] = 2.0;  // mirror of 3 is 61, still 1.0
  CHECK_THROWS_AS(Psd{v}, std::invalid_argument);
  v[61] = 2.0;
  CHECK_NOTHROW(Psd{v});
  CHECK_THROWS(Psd{std::vector<double>(60, 1.0)});
}

TEST_CASE("band_energy examples") {
  CHECK(band_energy(FirFilter::zero(), 4.0) == doctest::Approx(0.25).epsilon(1e-15));
  CHECK(band_energy(FirFilter::zero(), 1.0) == doctest::Approx(1.0).epsilon(1e-15));
  const double one_tap = band_energy(FirFilter({1.0}), 2.0);
  CHECK(one_tap == doctest::Approx(0.363380).epsilon(1e-6));
  CHECK(one_tap == doctest::Approx(oracle::band_energy({1.0}, 2.0)).epsilon(1e-12));
}

TEST_CASE("band_energy agrees with the quadrature oracle on random filters") {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 40; ++trial) {
    const auto taps = random_taps(rng, 1 + trial % 12);
    const double L = 1.0 + 0.37 * trial;
    const double ref = oracle::band_energy(taps, L);
    CHECK(std::abs(band_energy(FirFilter(taps), L) - ref) <= 1e-11 * std::max(1.0, ref));
  }
}

TEST_CASE("total_energy examples and Parseval on the grid") {
  CHECK(total_energy(FirFilter::zero()) == 0.0);
  CHECK(total_energy(FirFilter({1.0})) == 1.0);
  CHECK(total_energy(FirFilter({0.5, -0.25})) == 0.3125);

  std::mt19937_64 rng(5);
  for (std::size_t p : {1u, 7u, 20u, 31u}) {
    const FirFilter f(random_taps(rng, p));
    const FrequencyGrid grid(64);  // M >= 2p + 2
    CHECK(std::abs(grid.integrate(filter_power(f, grid)) - total_energy(f)) < 1e-12);
    // At L = 1 the band is the whole circle: 1 + sum c^2 since C is strictly causal.
    const double full = grid.integrate(noise_transfer_power(f, grid));
    CHECK(std::abs(full - (1.0 + total_energy(f))) < 1e-12);
    CHECK(std::abs(band_energy(f, 1.0) - full) < 1e-12);
  }
}

TEST_CASE("FirFilter basics") {
  const FirFilter f({0.5, -0.25, 0.125});
  CHECK(f.order() == 3);
  CHECK(f.tap(2) == -0.25);
  CHECK(f.dc_gain() == doctest::Approx(0.375));
  CHECK(f.response(0.0).real() == doctest::Approx(0.375));
  CHECK(std::abs(f.response(0.0).imag()) < 1e-15);
  const auto a = f.noise_transfer();
  REQUIRE(a.size() == 4);
  CHECK(a[0] == 1.0);
  CHECK(a[1] == -0.5);
  CHECK_THROWS(FirFilter({std::nan("")}));
}

TEST_CASE("grid CSV round trip and validation") {
  const FrequencyGrid grid(64);
  const auto w = triangle_weight(grid, 2.0);
  const auto path = temp_path("grid.csv");
  write_grid_csv(path, w);
  CHECK(read_grid_csv(path) == w);

  {
    std::ofstream bad(path);
    bad << "w,v\n";
  }
  CHECK_THROWS(read_grid_csv(path));
  {
    std::ofstream bad(path);
    bad.precision(17);
    bad << "omega,value\n";
    for (std::size_t m = 0; m < 64; ++m) bad << grid.omega(m) << ',' << (m == 5 ? 3.0 : 1.0) << '\n';
  }
  CHECK_THROWS(read_grid_csv(path));
  CHECK_THROWS(read_grid_csv(temp_path("does_not_exist.csv")));
  std::filesystem::remove(path);
}
