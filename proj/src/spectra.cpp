#include "sigdelta/spectra.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "sigdelta/fft.hpp"

namespace sigdelta {

using std::numbers::pi;

BandSpec::BandSpec(double oversampling, double sigma2_x)
    : oversampling_(oversampling), sigma2_x_(sigma2_x) {
  if (!(oversampling >= 1.0) || !std::isfinite(oversampling))
    throw std::invalid_argument("BandSpec: oversampling ratio L must be >= 1");
  if (!(sigma2_x > 0.0) || !std::isfinite(sigma2_x))
    throw std::invalid_argument("BandSpec: source variance must be > 0");
}

double BandSpec::band_edge() const { return pi / oversampling_; }

// ---------------------------------------------------------------------------

FirFilter::FirFilter(std::vector<double> taps) : taps_(std::move(taps)) {
  for (double c : taps_)
    if (!std::isfinite(c)) throw std::invalid_argument("FirFilter: non-finite tap");
}

double FirFilter::tap(std::size_t n) const {
  if (n == 0 || n > taps_.size()) return 0.0;
  return taps_[n - 1];
}

std::complex<double> FirFilter::response(double omega) const {
  std::complex<double> acc{0.0, 0.0};
  for (std::size_t n = 1; n <= taps_.size(); ++n)
    acc += taps_[n - 1] * std::polar(1.0, -omega * static_cast<double>(n));
  return acc;
}

double FirFilter::dc_gain() const { return std::accumulate(taps_.begin(), taps_.end(), 0.0); }

std::vector<double> FirFilter::noise_transfer() const {
  std::vector<double> a(taps_.size() + 1);
  a[0] = 1.0;
  for (std::size_t n = 0; n < taps_.size(); ++n) a[n + 1] = -taps_[n];
  return a;
}

// ---------------------------------------------------------------------------

FrequencyGrid::FrequencyGrid(std::size_t size) : size_(size) {
  if (size < 16 || !std::has_single_bit(size))
    throw std::invalid_argument("FrequencyGrid: size must be a power of two >= 16");
}

double FrequencyGrid::spacing() const { return 2.0 * pi / static_cast<double>(size_); }

double FrequencyGrid::omega(std::size_t m) const {
  return -pi + 2.0 * pi * static_cast<double>(m) / static_cast<double>(size_);
}

void FrequencyGrid::check_size(std::size_t n) const {
  if (n != size_)
    throw std::invalid_argument("grid size " + std::to_string(n) +
                                " does not match the configured grid size " +
                                std::to_string(size_));
}

double FrequencyGrid::integrate(std::span<const double> values) const {
  check_size(values.size());
  return std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(size_);
}

namespace {

// int_0^s of the cubic Lagrange basis on nodes x = 0, -1, -2, -3.
std::array<double, 4> cubic_extrapolation_weights(double s) {
  const double s2 = s * s, s3 = s2 * s, s4 = s3 * s;
  const double i3 = s4 / 4.0, i2 = s3 / 3.0, i1 = s2 / 2.0, i0 = s;
  return {
      (i3 + 6.0 * i2 + 11.0 * i1 + 6.0 * i0) / 6.0,
      -(i3 + 5.0 * i2 + 6.0 * i1) / 2.0,
      (i3 + 4.0 * i2 + 3.0 * i1) / 2.0,
      -(i3 + 3.0 * i2 + 2.0 * i1) / 6.0,
  };
}

}  // namespace

std::vector<double> FrequencyGrid::band_weights(double oversampling) const {
  if (!(oversampling >= 1.0)) throw std::invalid_argument("band_weights: L must be >= 1");
  const double inv_m = 1.0 / static_cast<double>(size_);
  std::vector<double> w(size_, 0.0);
  if (oversampling == 1.0) {
    std::fill(w.begin(), w.end(), inv_m);
    return w;
  }

  // Band edge in units of the grid spacing, measured from omega = 0.
  const double edge = static_cast<double>(size_) / (2.0 * oversampling);
  const auto half = static_cast<long>(std::floor(edge + 1e-9));
  const double frac = std::max(0.0, edge - static_cast<double>(half));
  if (half < 4)
    throw std::invalid_argument("band_weights: grid too coarse for the band (need >= 9 in-band points)");

  // Two panels [-edge, 0] and [0, edge], each trapezoid plus fourth-order
  // Gregory end corrections. Splitting at DC keeps fourth order for even
  // integrands with a kink at omega = 0, such as |omega| weights.
  const auto center = static_cast<long>(size_ / 2);
  for (long i = -half; i <= half; ++i) w[center + i] = 1.0;
  w[center - half] = w[center + half] = 0.5;
  w[center] = 1.0;
  constexpr std::array<double, 3> corr{-1.0 / 8.0, 1.0 / 6.0, -1.0 / 24.0};
  for (long i = 0; i < 3; ++i) {
    w[center - half + i] += corr[i];
    w[center + half - i] += corr[i];
    w[center - i] += corr[i];
    w[center + i] += corr[i];
  }
  if (frac > 0.0) {
    const auto ext = cubic_extrapolation_weights(frac);
    for (long i = 0; i < 4; ++i) {
      w[center + half - i] += ext[i];
      w[center - half + i] += ext[i];
    }
  }
  for (double& v : w) v *= inv_m;
  return w;
}

double FrequencyGrid::integrate_band(std::span<const double> values, double oversampling) const {
  check_size(values.size());
  const auto w = band_weights(oversampling);
  return std::inner_product(values.begin(), values.end(), w.begin(), 0.0);
}

// ---------------------------------------------------------------------------

GridFunction::GridFunction(std::vector<double> values) : values_(std::move(values)) {
  const std::size_t m = values_.size();
  if (m < 16 || !std::has_single_bit(m))
    throw std::invalid_argument("grid function: size must be a power of two >= 16");
  for (std::size_t i = 0; i < m; ++i) {
    if (!std::isfinite(values_[i]) || values_[i] < 0.0)
      throw std::invalid_argument("grid function: values must be finite and nonnegative");
    const double mirror = values_[(m - i) % m];
    const double scale = std::max({1.0, std::abs(values_[i]), std::abs(mirror)});
    if (std::abs(values_[i] - mirror) > kSymmetryTolerance * scale)
      throw std::invalid_argument("grid function: values are not even-symmetric");
  }
}

double GridFunction::at(double omega) const {
  const double m = static_cast<double>(values_.size());
  double pos = (omega + pi) / (2.0 * pi) * m;
  pos = std::fmod(pos, m);
  if (pos < 0.0) pos += m;
  const auto i0 = static_cast<std::size_t>(std::floor(pos));
  const double t = pos - static_cast<double>(i0);
  const std::size_t a = i0 % values_.size();
  const std::size_t b = (i0 + 1) % values_.size();
  return (1.0 - t) * values_[a] + t * values_[b];
}

Psd::Psd(std::vector<double> values) : GridFunction(std::move(values)) {}

FrequencyWeight::FrequencyWeight(std::vector<double> values) : GridFunction(std::move(values)) {}

FrequencyWeight FrequencyWeight::unit(const FrequencyGrid& grid) {
  return FrequencyWeight(std::vector<double>(grid.size(), 1.0));
}

bool FrequencyWeight::vanishes_on_band(double oversampling) const {
  const FrequencyGrid grid(values_.size());
  const double edge = pi / oversampling;
  for (std::size_t m = 0; m < values_.size(); ++m)
    if (std::abs(grid.omega(m)) <= edge && values_[m] > 0.0) return false;
  return true;
}

// ---------------------------------------------------------------------------

double sinc(double x) {
  if (x != 0.0 && x == std::trunc(x)) return 0.0;
  const double px = pi * x;
  if (std::abs(x) < 1e-4) {
    const double p2 = px * px;
    return 1.0 - p2 / 6.0 + p2 * p2 / 120.0 - p2 * p2 * p2 / 5040.0;
  }
  return std::sin(px) / px;
}

double flat_band_autocorr(const BandSpec& spec, long k) {
  return spec.sigma2_x() * sinc(static_cast<double>(k) / spec.oversampling());
}

std::vector<double> flat_band_autocorr(const BandSpec& spec, std::size_t max_lag) {
  std::vector<double> r(max_lag + 1);
  for (std::size_t k = 0; k <= max_lag; ++k) r[k] = flat_band_autocorr(spec, static_cast<long>(k));
  return r;
}

double weighted_band_autocorr(const FrequencyGrid& grid, const BandSpec& spec,
                              const FrequencyWeight& weight, long k) {
  return weighted_band_autocorr(grid, spec, weight, static_cast<std::size_t>(std::abs(k)))
      .back();
}

std::vector<double> weighted_band_autocorr(const FrequencyGrid& grid, const BandSpec& spec,
                                           const FrequencyWeight& weight, std::size_t max_lag) {
  if (weight.grid_size() != grid.size())
    throw std::invalid_argument("weighted_band_autocorr: weight grid size " +
                                std::to_string(weight.grid_size()) +
                                " does not match the configured grid size " +
                                std::to_string(grid.size()));
  const auto w = grid.band_weights(spec.oversampling());
  std::vector<std::size_t> support;
  for (std::size_t m = 0; m < grid.size(); ++m)
    if (w[m] != 0.0) support.push_back(m);

  std::vector<double> r(max_lag + 1, 0.0);
  for (std::size_t k = 0; k <= max_lag; ++k) {
    double acc = 0.0;
    for (std::size_t m : support)
      acc += w[m] * weight[m] * std::cos(grid.omega(m) * static_cast<double>(k));
    r[k] = spec.flat_level() * acc;
  }
  return r;
}

std::vector<double> sequence_autocorr(std::span<const double> a) {
  const std::size_t n = a.size();
  std::vector<double> r(n, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    double acc = 0.0;
    for (std::size_t i = 0; i + k < n; ++i) acc += a[i] * a[i + k];
    r[k] = acc;
  }
  return r;
}

double band_energy(const FirFilter& filter, double oversampling) {
  if (!(oversampling >= 1.0)) throw std::invalid_argument("band_energy: L must be >= 1");
  // |1 - C|^2 = r_0 + 2 sum_k r_k cos(k w); (1/2pi) int_band cos(k w) = sinc(k/L) / L.
  const auto a = filter.noise_transfer();
  const auto r = sequence_autocorr(a);
  double acc = r[0];
  for (std::size_t k = 1; k < r.size(); ++k)
    acc += 2.0 * r[k] * sinc(static_cast<double>(k) / oversampling);
  return acc / oversampling;
}

double total_energy(const FirFilter& filter) {
  double acc = 0.0;
  for (double c : filter.taps()) acc += c * c;
  return acc;
}

namespace {

// |sum_n h_n e^{-j w n}|^2 on the grid, with h folded modulo M.
std::vector<double> power_on_grid(std::span<const double> h, const FrequencyGrid& grid) {
  const std::size_t m = grid.size();
  std::vector<double> folded(m, 0.0);
  for (std::size_t n = 0; n < h.size(); ++n) folded[n % m] += h[n];
  const auto spec = fft::forward(folded);
  std::vector<double> out(m);
  for (std::size_t i = 0; i < m; ++i) {
    // grid index i has omega = 2 pi (i - M/2) / M, i.e. FFT bin (i + M/2) mod M.
    const std::size_t q = (i + m / 2) % m;
    const std::complex<double> v = q <= m / 2 ? spec[q] : std::conj(spec[m - q]);
    out[i] = std::norm(v);
  }
  return out;
}

}  // namespace

std::vector<double> noise_transfer_power(const FirFilter& filter, const FrequencyGrid& grid) {
  const auto a = filter.noise_transfer();
  return power_on_grid(a, grid);
}

std::vector<double> filter_power(const FirFilter& filter, const FrequencyGrid& grid) {
  std::vector<double> h(filter.order() + 1, 0.0);
  std::copy(filter.taps().begin(), filter.taps().end(), h.begin() + 1);
  return power_on_grid(h, grid);
}

// ---------------------------------------------------------------------------

std::vector<double> read_grid_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error(path + ": empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "omega,value") throw std::runtime_error(path + ": expected header 'omega,value'");

  std::vector<double> omegas, values;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw std::runtime_error(path + ": malformed row '" + line + "'");
    try {
      omegas.push_back(std::stod(line.substr(0, comma)));
      values.push_back(std::stod(line.substr(comma + 1)));
    } catch (const std::exception&) {
      throw std::runtime_error(path + ": malformed row '" + line + "'");
    }
  }
  const FrequencyGrid grid(values.size());
  const double tol = 1e-9;
  for (std::size_t m = 0; m < omegas.size(); ++m)
    if (std::abs(omegas[m] - grid.omega(m)) > tol)
      throw std::runtime_error(path + ": omega column does not match the uniform grid on [-pi, pi)");
  GridFunction check(values);  // nonnegativity and symmetry
  return values;
}

void write_grid_csv(const std::string& path, std::span<const double> values) {
  const FrequencyGrid grid(values.size());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << "omega,value\n";
  char buf[96];
  for (std::size_t m = 0; m < values.size(); ++m) {
    std::snprintf(buf, sizeof buf, "%.17g,%.17g\n", grid.omega(m), values[m]);
    out << buf;
  }
}

}  // namespace sigdelta
