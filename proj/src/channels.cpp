#include "sigdelta/channels.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

namespace sigdelta {

std::string_view to_string(Architecture arch) {
  switch (arch) {
    case Architecture::SigmaDelta: return "sigma_delta";
    case Architecture::Dpcm: return "dpcm";
  }
  return "unknown";
}

namespace {

double half_log2(double snr_plus_one) { return 0.5 * std::log2(snr_plus_one); }

void require_positive(double v, const char* what) {
  if (!(v > 0.0) || !std::isfinite(v))
    throw std::invalid_argument(std::string(what) + " must be a positive finite number");
}

}  // namespace

RatePoint sigma_delta_rd(const BandSpec& spec, const FirFilter& filter, double sigma2_sd,
                         std::optional<WeightedDistortion> weighting) {
  if (!(sigma2_sd > 0.0)) throw std::invalid_argument("sigma_delta_rd: noise variance must be > 0");
  double shaped = 0.0;
  if (weighting) {
    const auto ntf = noise_transfer_power(filter, weighting->grid);
    std::vector<double> integrand(ntf.size());
    for (std::size_t m = 0; m < ntf.size(); ++m) integrand[m] = weighting->weight[m] * ntf[m];
    shaped = weighting->grid.integrate_band(integrand, spec.oversampling());
  } else {
    shaped = band_energy(filter, spec.oversampling());
  }
  RatePoint out;
  out.architecture = Architecture::SigmaDelta;
  out.distortion = sigma2_sd * shaped;
  // sigma2_sd -> inf is allowed and gives I -> 0.
  out.mutual_info_bits = half_log2(1.0 + total_energy(filter) + spec.sigma2_x() / sigma2_sd);
  return out;
}

RatePoint dpcm_rd(const BandSpec& spec, const FirFilter& filter, double sigma2_dpcm) {
  if (!(sigma2_dpcm > 0.0)) throw std::invalid_argument("dpcm_rd: noise variance must be > 0");
  const double L = spec.oversampling();
  RatePoint out;
  out.architecture = Architecture::Dpcm;
  out.distortion = sigma2_dpcm / L;
  out.mutual_info_bits = half_log2(1.0 + total_energy(filter) +
                                   (L * spec.sigma2_x() / sigma2_dpcm) * band_energy(filter, L));
  return out;
}

NoiseMapping dual_noise_variance(const BandSpec& spec, const FirFilter& filter, double target_d) {
  require_positive(target_d, "dual_noise_variance: target distortion");
  const double be = band_energy(filter, spec.oversampling());
  if (!(be > 0.0))
    throw std::domain_error("dual_noise_variance: 1 - C(omega) vanishes on the band; distortion unreachable");
  return NoiseMapping{target_d / be, spec.oversampling() * target_d, be};
}

double rate_lower_bound(const BandSpec& spec, double target_d) {
  require_positive(target_d, "rate_lower_bound: target distortion");
  return std::log2(1.0 + spec.sigma2_x() / target_d) / (2.0 * spec.oversampling());
}

PostScaling post_scaling(const BandSpec& spec, double d) {
  require_positive(d, "post_scaling: distortion");
  const double s2 = spec.sigma2_x();
  PostScaling out;
  out.alpha = s2 / (s2 + d);
  out.d_tilde = s2 * d / (s2 + d);
  out.rate_bits = std::log2(s2 / out.d_tilde) / (2.0 * spec.oversampling());
  return out;
}

}  // namespace sigdelta
