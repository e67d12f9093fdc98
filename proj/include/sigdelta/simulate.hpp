#pragma once

// Time-domain Monte Carlo of the sigma-delta loop.
//
// Each block: synthesize a band-limited Gaussian source, run the feedback loop
// sample by sample from zeroed filter memory, reconstruct with an ideal
// per-block spectral lowpass, and collect distortion and overload statistics.
//
// Random numbers: std::mt19937_64 engines seeded per (seed, block, stream)
// through a splitmix64 mix, so blocks are independent substreams and can run
// on any number of threads with bit-identical results.

#include <cstdint>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "sigdelta/spectra.hpp"

namespace sigdelta {

/// Mid-rise uniform quantizer with 2^R levels at odd multiples of step/2.
class QuantizerSpec {
 public:
  QuantizerSpec(int rate_bits, double sigma2);

  int rate_bits() const { return rate_bits_; }
  double sigma2() const { return sigma2_; }
  /// sqrt(12 sigma2)
  double step() const { return step_; }
  /// 2^R * step; the support is [-support/2, support/2).
  double support() const { return support_; }
  std::vector<double> levels() const;

 private:
  int rate_bits_;
  double sigma2_;
  double step_;
  double support_;
};

struct QuantizerOutput {
  double level = 0.0;
  bool overloaded = false;
};

/// Nearest level; inputs outside [-support/2, support/2) clamp to the
/// extreme level and report overload. Cell boundaries round toward +inf.
QuantizerOutput quantize(const QuantizerSpec& q, double x);

struct AwgnNoise {
  double sigma2 = 0.0;
};
struct DitheredQuantizer {
  QuantizerSpec quantizer;
};
using NoiseModel = std::variant<AwgnNoise, DitheredQuantizer>;

/// Source PSD shape; empty means flat on the band. A custom shape is a Psd on
/// any grid size, zero off the band; it is rescaled to the source variance.
using SourceShape = std::optional<Psd>;

/// Named in-band shapes used for compound-class checks: "flat", "triangle",
/// "cosine", "rising", "two_level". Each integrates to sigma2_x.
Psd make_source_shape(const std::string& name, const BandSpec& spec,
                      std::size_t grid_size = FrequencyGrid::kDefaultSize);

std::vector<std::string> source_shape_names();

/// Throws std::invalid_argument if `shape` has mass off the band or does not
/// integrate to sigma2_x within 1e-3 relative.
void validate_source_shape(const BandSpec& spec, const Psd& shape);

struct SimConfig {
  BandSpec spec{2.0, 1.0};
  FirFilter filter;
  NoiseModel noise = AwgnNoise{1.0};
  std::size_t block_len = 4096;
  std::size_t num_blocks = 1;
  std::uint64_t seed = 0;
  SourceShape source_shape;
  /// Name recorded in serialized configs ("flat", a named shape, or "custom").
  std::string source_label = "flat";
  /// Samples skipped at each block start for steady-state statistics;
  /// nullopt means the filter order.
  std::optional<std::size_t> guard;
  /// 0 selects std::thread::hardware_concurrency().
  unsigned threads = 0;
};

void validate(const SimConfig& cfg);

struct Estimate {
  double mean = 0.0;
  double std_error = 0.0;
  std::size_t count = 0;
};

struct SimReport {
  Estimate mse_conditional;  ///< steady-state MSE over blocks without overload
  Estimate mse_all;          ///< steady-state MSE over all blocks
  Estimate mse_full_block;   ///< MSE including the guard samples, all blocks
  Estimate var_u;            ///< steady-state second moment of the quantizer input
  Estimate overload_block_rate;
  Estimate overload_sample_rate;
  std::size_t overloaded_blocks = 0;
  std::size_t overloaded_samples = 0;
  double analytic_d = 0.0;            ///< sigma2 * band_energy
  double analytic_rate_bits = 0.0;    ///< scalar mutual information I
  double analytic_var_u = 0.0;        ///< sigma2_x + sigma2 sum c^2
  std::optional<double> bound_pol;    ///< 2N exp(-3/2 2^{2(R - I)}), dithered only
  std::optional<double> excess_rate;  ///< R - I, dithered only
};

struct LoopTrace {
  std::vector<double> x;
  std::vector<double> u;
  std::vector<double> n_err;
  std::vector<double> dither;  ///< empty for the AWGN loop
  std::vector<double> xhat;
  std::vector<std::uint8_t> overload;
};

/// One circular stationary Gaussian block with the given in-band PSD shape.
std::vector<double> synthesize_band_limited(const BandSpec& spec, const SourceShape& shape,
                                            std::size_t n, std::uint64_t seed);

/// Per-block spectral projection onto |omega| <= pi/L.
std::vector<double> lowpass_ideal(std::span<const double> x, double oversampling);

LoopTrace run_awgn_loop(std::span<const double> x, const FirFilter& filter, double sigma2_sd,
                        double oversampling, std::uint64_t seed);

LoopTrace run_dithered_loop(std::span<const double> x, const FirFilter& filter,
                            const QuantizerSpec& q, double oversampling, std::uint64_t seed);

/// Trace of block `block` exactly as monte_carlo() runs it.
LoopTrace simulate_block(const SimConfig& cfg, std::size_t block);

SimReport monte_carlo(const SimConfig& cfg);

/// delta = 1/2 log2(-(2/3) ln(p_ol / (2N))).
double overload_rate_penalty(double p_ol, std::size_t n);

/// Union bound 2N exp(-(3/2) 2^{2 excess}) on the block overload probability.
double overload_bound(double excess_rate_bits, std::size_t n);

/// splitmix64-derived substream seed.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t block, std::uint64_t stream);

}  // namespace sigdelta
