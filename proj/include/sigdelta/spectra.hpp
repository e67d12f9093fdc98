#pragma once

// Power spectral densities, autocorrelations and frequency-domain quadrature
// shared by the analytic and design code.

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace sigdelta {

/// Oversampled band-limited Gaussian source class: PSD supported on
/// [-pi/L, pi/L], total variance sigma2_x.
class BandSpec {
 public:
  BandSpec(double oversampling, double sigma2_x);

  double oversampling() const { return oversampling_; }
  double sigma2_x() const { return sigma2_x_; }
  /// Upper band edge pi/L.
  double band_edge() const;
  /// Height L * sigma2_x of the flat in-band PSD.
  double flat_level() const { return oversampling_ * sigma2_x_; }

 private:
  double oversampling_;
  double sigma2_x_;
};

/// Strictly causal FIR filter C(Z) = sum_{n=1..p} c_n Z^-n.
/// taps()[0] holds c_1; the zero-lag coefficient is implicitly zero.
class FirFilter {
 public:
  FirFilter() = default;
  explicit FirFilter(std::vector<double> taps);

  static FirFilter zero() { return FirFilter{}; }

  std::size_t order() const { return taps_.size(); }
  std::span<const double> taps() const { return taps_; }
  /// c_n for n >= 1, zero beyond the order.
  double tap(std::size_t n) const;

  /// C(omega) = sum c_n e^{-j omega n}.
  std::complex<double> response(double omega) const;
  /// C(0) = sum c_n.
  double dc_gain() const;

  /// Coefficients of the monic noise-transfer filter 1 - C(Z): [1, -c_1, ..., -c_p].
  std::vector<double> noise_transfer() const;

  bool operator==(const FirFilter&) const = default;

 private:
  std::vector<double> taps_;
};

/// Uniform M-point frequency grid omega_m = -pi + 2 pi m / M, M a power of two.
class FrequencyGrid {
 public:
  static constexpr std::size_t kDefaultSize = std::size_t{1} << 16;

  explicit FrequencyGrid(std::size_t size = kDefaultSize);

  std::size_t size() const { return size_; }
  double spacing() const;
  double omega(std::size_t m) const;
  /// Index of the mirror point -omega_m.
  std::size_t mirror(std::size_t m) const { return (size_ - m) % size_; }

  /// (1/2pi) int_{-pi}^{pi} f, rectangle rule (exact for trig polynomials of
  /// degree < M).
  double integrate(std::span<const double> values) const;

  /// Quadrature weights for (1/2pi) int_{-pi/L}^{pi/L} f. Interior points use
  /// fourth-order end-corrected trapezoid weights; the partial cells between
  /// the last grid point and the band edge use cubic extrapolation from the
  /// in-band samples. L == 1 falls back to the periodic rule.
  std::vector<double> band_weights(double oversampling) const;

  /// (1/2pi) int_{-pi/L}^{pi/L} f.
  double integrate_band(std::span<const double> values, double oversampling) const;

  bool operator==(const FrequencyGrid&) const = default;

 private:
  void check_size(std::size_t n) const;
  std::size_t size_;
};

/// Nonnegative even-symmetric function sampled on a FrequencyGrid.
class GridFunction {
 public:
  static constexpr double kSymmetryTolerance = 1e-12;

  explicit GridFunction(std::vector<double> values);

  std::size_t grid_size() const { return values_.size(); }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t m) const { return values_[m]; }
  /// Linear interpolation at an arbitrary omega (wrapped to [-pi, pi)).
  double at(double omega) const;

 protected:
  std::vector<double> values_;
};

/// Power spectral density on the grid.
class Psd : public GridFunction {
 public:
  explicit Psd(std::vector<double> values);
};

/// Frequency weighting P(omega) for FWMSE distortion.
class FrequencyWeight : public GridFunction {
 public:
  explicit FrequencyWeight(std::vector<double> values);

  static FrequencyWeight unit(const FrequencyGrid& grid);

  /// True when every in-band sample is zero. Such a weight is a valid
  /// function but gives a degenerate design problem.
  bool vanishes_on_band(double oversampling) const;
};

/// sin(pi x) / (pi x), Taylor-expanded for |x| < 1e-4.
double sinc(double x);

/// R_S[k] = sigma2_x sinc(k / L) of the flat in-band process.
double flat_band_autocorr(const BandSpec& spec, long k);

/// (1/2pi) int_{-pi/L}^{pi/L} L sigma2_x P(omega) cos(omega k) domega.
double weighted_band_autocorr(const FrequencyGrid& grid, const BandSpec& spec,
                              const FrequencyWeight& weight, long k);

/// Lags 0..max_lag of weighted_band_autocorr in one pass.
std::vector<double> weighted_band_autocorr(const FrequencyGrid& grid, const BandSpec& spec,
                                           const FrequencyWeight& weight, std::size_t max_lag);

/// Lags 0..max_lag of flat_band_autocorr.
std::vector<double> flat_band_autocorr(const BandSpec& spec, std::size_t max_lag);

/// Deterministic autocorrelation r_k = sum_n a_n a_{n+k}, k = 0..len-1.
std::vector<double> sequence_autocorr(std::span<const double> a);

/// (1/2pi) int_{-pi/L}^{pi/L} |1 - C(omega)|^2, exact cosine-series evaluation.
double band_energy(const FirFilter& filter, double oversampling);

/// (1/2pi) int |C(omega)|^2 = sum c_n^2.
double total_energy(const FirFilter& filter);

/// |1 - C(omega_m)|^2 on every grid point.
std::vector<double> noise_transfer_power(const FirFilter& filter, const FrequencyGrid& grid);

/// |C(omega_m)|^2 on every grid point.
std::vector<double> filter_power(const FirFilter& filter, const FrequencyGrid& grid);

/// CSV `omega,value` with one row per grid point, omega ascending in [-pi, pi).
std::vector<double> read_grid_csv(const std::string& path);
void write_grid_csv(const std::string& path, std::span<const double> values);

}  // namespace sigdelta
