#pragma once

// Optimal feedback-filter construction.
//
// A sigma-delta filter at target distortion D is designed as the MMSE
// predictor of a "virtual" flat band-limited process S_n (PSD L*sigma2_x on
// the band) from the strict past of S_n + W_n, where W_n is white with
// variance L*D. The resulting rate is 1/2 log2(1 + sigma*^2 / (L D)).

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "sigdelta/spectra.hpp"

namespace sigdelta {

/// Second-order statistics of the virtual prediction problem.
struct PredictionProblem {
  std::vector<double> autocorr;  ///< R_S[0..p]
  double noise_var = 0.0;        ///< L * D
  std::size_t order = 0;         ///< p

  /// R_Y[k] = R_S[k] + noise_var [k == 0].
  double noisy_autocorr(std::size_t k) const {
    return autocorr[k] + (k == 0 ? noise_var : 0.0);
  }
};

PredictionProblem make_prediction_problem(const BandSpec& spec, double d, std::size_t order);

/// FWMSE variant: R_S taken from the weighted virtual PSD L sigma2_x P(omega).
PredictionProblem make_weighted_prediction_problem(const FrequencyGrid& grid, const BandSpec& spec,
                                                   const FrequencyWeight& weight, double d,
                                                   std::size_t order);

enum class DesignMethod { Levinson, Dense, Cepstrum };

struct DesignDiagnostics {
  DesignMethod method = DesignMethod::Levinson;
  /// min over recursion steps of 1 - |k_m|; 1 when p == 0.
  double reflection_margin = 1.0;
  /// max-norm residual of the normal equations at the returned solution.
  double normal_equation_residual = 0.0;
};

struct DesignResult {
  FirFilter filter;
  double pred_error_var = 0.0;  ///< sigma*^2
  double rate_bits = 0.0;       ///< 1/2 log2(1 + sigma*^2 / (L D))
  DesignDiagnostics diagnostics;
};

/// E(S_n - sum_j c_j (S_{n-j} + W_{n-j}))^2 from R_S[0..p] (p >= filter order).
double prediction_objective(std::span<const double> autocorr, double noise_var,
                            const FirFilter& filter);

/// Flat-source form.
double prediction_objective(const BandSpec& spec, double d, const FirFilter& filter);

/// Weighted-source form.
double prediction_objective(const FrequencyGrid& grid, const BandSpec& spec,
                            const FrequencyWeight& weight, double d, const FirFilter& filter);

/// Solves the Toeplitz normal equations Toeplitz(R_Y[0..p-1]) c = R_S[1..p]
/// by the Levinson-Durbin recursion, with a dense LDL^T fallback when a
/// reflection coefficient reaches 1 - 1e-12 in magnitude.
DesignResult solve_prediction_problem(const PredictionProblem& problem);

/// Optimal p-tap sigma-delta filter for MSE distortion d.
DesignResult design_fir_predictor(const BandSpec& spec, double d, std::size_t order);

/// Optimal p-tap filter for FWMSE distortion d_fwmse under weight P.
DesignResult design_fwmse_predictor(const FrequencyGrid& grid, const BandSpec& spec,
                                    const FrequencyWeight& weight, double d_fwmse,
                                    std::size_t order);

struct EntropyPowerLimit {
  double pred_limit = 0.0;     ///< infinite-order sigma*^2
  double entropy_power = 0.0;  ///< (L D)(1 + sigma2_x / D)^{1/L}
};

EntropyPowerLimit entropy_power_limit(const BandSpec& spec, double d);

struct UnconstrainedOptions {
  std::size_t taps = 4096;
  /// Half-width of the raised-cosine transition at +-pi/L; negative selects pi/(8L).
  double transition = -1.0;
  /// Rate gap (bits) above which the result is flagged.
  double max_rate_gap = 5e-3;
};

struct UnconstrainedDesign {
  DesignResult result;
  double in_band_level = 0.0;      ///< ideal |1 - C|^2 on the band
  double out_of_band_level = 0.0;  ///< ideal |1 - C|^2 off the band
  double transition = 0.0;         ///< half-width actually used
  /// (1/2pi) int log2 |1 - C(omega)|^2 of the truncated filter.
  double log_integral = 0.0;
  /// Zero-lag coefficient of A = 1 - C before truncation, minus one.
  double monic_error = 0.0;
  /// max |achieved / ideal - 1| of |1 - C|^2 outside the transition bands.
  double max_level_deviation = 0.0;
  /// Largest discarded coefficient magnitude beyond the truncation.
  double truncation_tail = 0.0;
  double rate_lower_bound = 0.0;
  double rate_gap = 0.0;
  bool within_tolerance = true;
};

/// Minimum-phase spectral factorization of the two-level optimal
/// |1 - C(omega)|^2 by the real-cepstrum method on the grid.
UnconstrainedDesign design_unconstrained(const FrequencyGrid& grid, const BandSpec& spec, double d,
                                         const UnconstrainedOptions& options = {});

std::string to_string(DesignMethod method);

}  // namespace sigdelta
