#pragma once

// Closed-form rate/distortion of the sigma-delta and DPCM AWGN test channels,
// the noise-variance mapping that makes them equivalent, and the
// filter-independent bounds. Mutual information is in bits throughout.

#include <optional>
#include <string_view>

#include "sigdelta/spectra.hpp"

namespace sigdelta {

enum class Architecture { SigmaDelta, Dpcm };

std::string_view to_string(Architecture arch);

struct RatePoint {
  double distortion = 0.0;
  double mutual_info_bits = 0.0;
  Architecture architecture = Architecture::SigmaDelta;
};

/// Noise variances under which the two test channels reach the same distortion.
struct NoiseMapping {
  double sigma2_sd = 0.0;
  double sigma2_dpcm = 0.0;
  double band_energy = 0.0;
};

/// Scalar MMSE post-scaling of the reconstruction.
struct PostScaling {
  double alpha = 0.0;
  double d_tilde = 0.0;
  double rate_bits = 0.0;
};

/// Optional FWMSE weighting: distortion becomes
/// sigma2_sd (1/2pi) int_band P |1 - C|^2 instead of the plain band energy.
struct WeightedDistortion {
  const FrequencyGrid& grid;
  const FrequencyWeight& weight;
};

/// Sigma-delta test channel: D = sigma2_sd * band_energy,
/// I = 1/2 log2(1 + sum c^2 + sigma2_x / sigma2_sd).
RatePoint sigma_delta_rd(const BandSpec& spec, const FirFilter& filter, double sigma2_sd,
                         std::optional<WeightedDistortion> weighting = std::nullopt);

/// DPCM test channel on the flat band-limited source: D = sigma2_dpcm / L,
/// I = 1/2 log2(1 + sum c^2 + (L sigma2_x / sigma2_dpcm) band_energy).
RatePoint dpcm_rd(const BandSpec& spec, const FirFilter& filter, double sigma2_dpcm);

NoiseMapping dual_noise_variance(const BandSpec& spec, const FirFilter& filter, double target_d);

/// (1/2L) log2(1 + sigma2_x / D).
double rate_lower_bound(const BandSpec& spec, double target_d);

PostScaling post_scaling(const BandSpec& spec, double d);

}  // namespace sigdelta
