#include "sigdelta/filter_design.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>

#include "sigdelta/channels.hpp"
#include "sigdelta/fft.hpp"

namespace sigdelta {

using std::numbers::pi;

std::string to_string(DesignMethod method) {
  switch (method) {
    case DesignMethod::Levinson: return "levinson";
    case DesignMethod::Dense: return "dense";
    case DesignMethod::Cepstrum: return "cepstrum";
  }
  return "unknown";
}

namespace {

void require_distortion(double d) {
  if (!(d > 0.0) || !std::isfinite(d))
    throw std::invalid_argument("target distortion must be a positive finite number");
}

constexpr double kReflectionLimit = 1.0 - 1e-12;

// Returns false when a reflection coefficient reaches the limit.
bool levinson(const PredictionProblem& problem, std::vector<double>& c, double& margin) {
  const std::size_t p = problem.order;
  c.assign(p, 0.0);
  std::vector<double> prev(p, 0.0);
  double err = problem.noisy_autocorr(0);
  margin = 1.0;
  for (std::size_t m = 1; m <= p; ++m) {
    double acc = problem.noisy_autocorr(m);
    for (std::size_t j = 1; j < m; ++j) acc -= c[j - 1] * problem.noisy_autocorr(m - j);
    const double k = acc / err;
    margin = std::min(margin, 1.0 - std::abs(k));
    if (!(std::abs(k) < kReflectionLimit)) return false;
    std::copy(c.begin(), c.begin() + static_cast<long>(m - 1), prev.begin());
    for (std::size_t j = 1; j < m; ++j) c[j - 1] = prev[j - 1] - k * prev[m - j - 1];
    c[m - 1] = k;
    err *= (1.0 - k * k);
  }
  return true;
}

std::vector<double> dense_solve(const PredictionProblem& problem) {
  const auto p = static_cast<Eigen::Index>(problem.order);
  Eigen::MatrixXd t(p, p);
  Eigen::VectorXd rhs(p);
  for (Eigen::Index i = 0; i < p; ++i) {
    rhs(i) = problem.autocorr[static_cast<std::size_t>(i + 1)];
    for (Eigen::Index j = 0; j < p; ++j)
      t(i, j) = problem.noisy_autocorr(static_cast<std::size_t>(std::abs(i - j)));
  }
  Eigen::LDLT<Eigen::MatrixXd> ldlt(t);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive() || ldlt.rcond() < 1e-15)
    throw std::runtime_error("prediction normal equations are numerically singular");
  const Eigen::VectorXd x = ldlt.solve(rhs);
  return {x.data(), x.data() + p};
}

double normal_equation_residual(const PredictionProblem& problem, const std::vector<double>& c) {
  double worst = 0.0;
  const std::size_t p = problem.order;
  for (std::size_t i = 0; i < p; ++i) {
    double acc = -problem.autocorr[i + 1];
    for (std::size_t j = 0; j < p; ++j)
      acc += problem.noisy_autocorr(i > j ? i - j : j - i) * c[j];
    worst = std::max(worst, std::abs(acc));
  }
  return worst;
}

}  // namespace

PredictionProblem make_prediction_problem(const BandSpec& spec, double d, std::size_t order) {
  require_distortion(d);
  return PredictionProblem{flat_band_autocorr(spec, order), spec.oversampling() * d, order};
}

PredictionProblem make_weighted_prediction_problem(const FrequencyGrid& grid, const BandSpec& spec,
                                                   const FrequencyWeight& weight, double d,
                                                   std::size_t order) {
  require_distortion(d);
  return PredictionProblem{weighted_band_autocorr(grid, spec, weight, order),
                           spec.oversampling() * d, order};
}

double prediction_objective(std::span<const double> autocorr, double noise_var,
                            const FirFilter& filter) {
  const std::size_t p = filter.order();
  if (autocorr.size() < p + 1)
    throw std::invalid_argument("prediction_objective: autocorrelation shorter than the filter");
  const auto c = filter.taps();
  double value = autocorr[0];
  for (std::size_t j = 0; j < p; ++j) value -= 2.0 * c[j] * autocorr[j + 1];
  for (std::size_t j = 0; j < p; ++j) {
    double row = c[j] * (autocorr[0] + noise_var);
    for (std::size_t k = j + 1; k < p; ++k) row += 2.0 * c[k] * autocorr[k - j];
    value += c[j] * row;
  }
  return value;
}

double prediction_objective(const BandSpec& spec, double d, const FirFilter& filter) {
  require_distortion(d);
  return prediction_objective(flat_band_autocorr(spec, filter.order()), spec.oversampling() * d,
                              filter);
}

double prediction_objective(const FrequencyGrid& grid, const BandSpec& spec,
                            const FrequencyWeight& weight, double d, const FirFilter& filter) {
  require_distortion(d);
  return prediction_objective(weighted_band_autocorr(grid, spec, weight, filter.order()),
                              spec.oversampling() * d, filter);
}

DesignResult solve_prediction_problem(const PredictionProblem& problem) {
  if (problem.order == 0) throw std::invalid_argument("prediction order must be >= 1");
  if (problem.autocorr.size() < problem.order + 1)
    throw std::invalid_argument("prediction problem: autocorrelation shorter than order + 1");
  if (!(problem.noise_var > 0.0))
    throw std::invalid_argument("prediction problem: noise variance must be > 0");

  DesignResult out;
  std::vector<double> c;
  double margin = 1.0;
  if (levinson(problem, c, margin)) {
    out.diagnostics.method = DesignMethod::Levinson;
  } else {
    c = dense_solve(problem);
    out.diagnostics.method = DesignMethod::Dense;
  }
  out.diagnostics.reflection_margin = margin;
  out.diagnostics.normal_equation_residual = normal_equation_residual(problem, c);
  out.filter = FirFilter(std::move(c));
  out.pred_error_var = prediction_objective(problem.autocorr, problem.noise_var, out.filter);
  out.rate_bits = 0.5 * std::log2(1.0 + out.pred_error_var / problem.noise_var);
  return out;
}

DesignResult design_fir_predictor(const BandSpec& spec, double d, std::size_t order) {
  return solve_prediction_problem(make_prediction_problem(spec, d, order));
}

DesignResult design_fwmse_predictor(const FrequencyGrid& grid, const BandSpec& spec,
                                    const FrequencyWeight& weight, double d_fwmse,
                                    std::size_t order) {
  if (weight.vanishes_on_band(spec.oversampling()))
    throw std::invalid_argument("design_fwmse_predictor: weight vanishes on the signal band");
  return solve_prediction_problem(
      make_weighted_prediction_problem(grid, spec, weight, d_fwmse, order));
}

EntropyPowerLimit entropy_power_limit(const BandSpec& spec, double d) {
  require_distortion(d);
  const double ld = spec.oversampling() * d;
  const double ep = ld * std::pow(1.0 + spec.sigma2_x() / d, 1.0 / spec.oversampling());
  return EntropyPowerLimit{ep - ld, ep};
}

UnconstrainedDesign design_unconstrained(const FrequencyGrid& grid, const BandSpec& spec, double d,
                                         const UnconstrainedOptions& options) {
  require_distortion(d);
  const double L = spec.oversampling();
  const std::size_t m = grid.size();
  if (options.taps < 16) throw std::invalid_argument("design_unconstrained: need at least 16 taps");
  if (2 * (options.taps + 1) > m)
    throw std::invalid_argument("design_unconstrained: grid too small for the requested taps");

  double wt = options.transition < 0.0 ? pi / (8.0 * L) : options.transition;
  if (L == 1.0) {
    wt = 0.0;
  } else if (!(wt < pi * (1.0 - 1.0 / L) / 2.0)) {
    throw std::invalid_argument("design_unconstrained: transition half-width must be < pi(1 - 1/L)/2");
  }

  const double snr_log = std::log1p(spec.sigma2_x() / d);
  const double log_in = -(L - 1.0) / L * snr_log;
  const double log_out = snr_log / L;
  const double edge = pi / L;

  // Target log|1 - C|^2 in FFT order (bin q at omega = 2 pi q / M).
  std::vector<double> target(m);
  for (std::size_t q = 0; q < m; ++q) {
    const double w = 2.0 * pi * static_cast<double>(std::min(q, m - q)) / static_cast<double>(m);
    if (w <= edge - wt) {
      target[q] = log_in;
    } else if (w >= edge + wt) {
      target[q] = log_out;
    } else {
      const double t = (w - (edge - wt)) / (2.0 * wt);
      target[q] = log_in + (log_out - log_in) * 0.5 * (1.0 - std::cos(pi * t));
    }
  }
  double mean = 0.0;
  for (double v : target) mean += v;
  mean /= static_cast<double>(m);
  for (double& v : target) v -= mean;

  // Real cepstrum of the (even) log-spectrum, folded onto nonnegative lags.
  const auto cep = fft::forward(target);
  const double inv_m = 1.0 / static_cast<double>(m);
  std::vector<double> folded(m, 0.0);
  folded[0] = 0.5 * cep[0].real() * inv_m;
  for (std::size_t n = 1; n < m / 2; ++n) folded[n] = cep[n].real() * inv_m;
  folded[m / 2] = 0.5 * cep[m / 2].real() * inv_m;

  auto spectrum = fft::forward(folded);
  for (auto& z : spectrum) z = std::exp(z);
  const auto a = fft::inverse(spectrum, m);

  UnconstrainedDesign out;
  out.in_band_level = std::exp(log_in);
  out.out_of_band_level = std::exp(log_out);
  out.transition = wt;
  out.monic_error = a[0] - 1.0;
  for (std::size_t n = options.taps + 1; n < m; ++n)
    out.truncation_tail = std::max(out.truncation_tail, std::abs(a[n]));

  std::vector<double> taps(options.taps);
  for (std::size_t n = 1; n <= options.taps; ++n) taps[n - 1] = -a[n];
  FirFilter filter(std::move(taps));

  const auto achieved = noise_transfer_power(filter, grid);
  std::vector<double> log2_power(m);
  for (std::size_t i = 0; i < m; ++i) log2_power[i] = std::log2(achieved[i]);
  out.log_integral = grid.integrate(log2_power);
  for (std::size_t i = 0; i < m; ++i) {
    const double w = std::abs(grid.omega(i));
    if (wt > 0.0 && std::abs(w - edge) <= wt) continue;
    const double ideal = w <= edge ? out.in_band_level : out.out_of_band_level;
    out.max_level_deviation = std::max(out.max_level_deviation, std::abs(achieved[i] / ideal - 1.0));
  }

  // E(S - c*(S + W))^2 = L sigma2_x band_energy + L D sum c^2 for the flat source.
  const double ld = L * d;
  const double sigma_star = spec.flat_level() * band_energy(filter, L) + ld * total_energy(filter);
  out.result.filter = std::move(filter);
  out.result.pred_error_var = sigma_star;
  out.result.rate_bits = 0.5 * std::log2(1.0 + sigma_star / ld);
  out.result.diagnostics.method = DesignMethod::Cepstrum;
  out.rate_lower_bound = rate_lower_bound(spec, d);
  out.rate_gap = out.result.rate_bits - out.rate_lower_bound;
  out.within_tolerance = out.rate_gap <= options.max_rate_gap;
  return out;
}

}  // namespace sigdelta
