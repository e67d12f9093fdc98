#include "sigdelta/simulate.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <thread>

#include "sigdelta/channels.hpp"
#include "sigdelta/fft.hpp"

namespace sigdelta {

using std::numbers::pi;

namespace {

enum Stream : std::uint64_t { kSourceStream = 0, kNoiseStream = 1 };

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Bins k = 0..n/2 with |2 pi k / n| <= pi / L.
std::size_t last_in_band_bin(std::size_t n, double oversampling) {
  const double edge = static_cast<double>(n) / (2.0 * oversampling);
  return std::min(n / 2, static_cast<std::size_t>(std::floor(edge + 1e-9)));
}

void require_even(std::size_t n, const char* what) {
  if (n == 0 || n % 2 != 0) throw std::invalid_argument(std::string(what) + ": length must be even and > 0");
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t block, std::uint64_t stream) {
  return splitmix64(seed ^ splitmix64(splitmix64(block) ^ (stream * 0xd1b54a32d192ed03ULL)));
}

// ---------------------------------------------------------------------------

QuantizerSpec::QuantizerSpec(int rate_bits, double sigma2) : rate_bits_(rate_bits), sigma2_(sigma2) {
  if (rate_bits < 1 || rate_bits > 52)
    throw std::invalid_argument("QuantizerSpec: rate must be an integer in [1, 52]");
  if (!(sigma2 > 0.0) || !std::isfinite(sigma2))
    throw std::invalid_argument("QuantizerSpec: sigma2 must be > 0");
  step_ = std::sqrt(12.0 * sigma2);
  support_ = std::ldexp(step_, rate_bits);
}

std::vector<double> QuantizerSpec::levels() const {
  const auto count = std::size_t{1} << rate_bits_;
  std::vector<double> out(count);
  const auto half = static_cast<double>(count / 2);
  for (std::size_t i = 0; i < count; ++i) out[i] = (static_cast<double>(i) - half + 0.5) * step_;
  return out;
}

QuantizerOutput quantize(const QuantizerSpec& q, double x) {
  // Cell k = floor(x / step) covers [k step, (k + 1) step); its level is
  // (k + 1/2) step regardless of R, so raising R never changes an
  // in-support output.
  const double half = std::ldexp(1.0, q.rate_bits() - 1);
  double cell = std::floor(x / q.step());
  QuantizerOutput out;
  if (!(cell >= -half)) {  // also catches NaN
    cell = -half;
    out.overloaded = true;
  } else if (cell >= half) {
    cell = half - 1.0;
    out.overloaded = true;
  }
  out.level = (cell + 0.5) * q.step();
  return out;
}

// ---------------------------------------------------------------------------

std::vector<std::string> source_shape_names() {
  return {"flat", "triangle", "cosine", "rising", "two_level"};
}

Psd make_source_shape(const std::string& name, const BandSpec& spec, std::size_t grid_size) {
  const FrequencyGrid grid(grid_size);
  const double edge = spec.band_edge();
  const double h = grid.spacing();
  const auto center = static_cast<long>(grid_size / 2);
  std::vector<double> v(grid_size, 0.0);
  for (std::size_t m = 0; m < grid_size; ++m) {
    const double w = static_cast<double>(std::abs(static_cast<long>(m) - center)) * h;
    if (w > edge) continue;
    const double r = w / edge;  // 0 at DC, 1 at the band edge
    if (name == "flat") {
      v[m] = 1.0;
    } else if (name == "triangle") {
      v[m] = 1.0 - r;
    } else if (name == "cosine") {
      v[m] = 0.5 * (1.0 + std::cos(pi * r));
    } else if (name == "rising") {
      v[m] = r * r;
    } else if (name == "two_level") {
      v[m] = r < 0.5 ? 1.0 : 0.1;
    } else {
      throw std::invalid_argument("unknown source shape '" + name + "'");
    }
  }
  const double total = grid.integrate(v);
  if (!(total > 0.0)) throw std::invalid_argument("source shape has no in-band mass on this grid");
  for (double& x : v) x *= spec.sigma2_x() / total;
  return Psd(std::move(v));
}

void validate_source_shape(const BandSpec& spec, const Psd& shape) {
  const FrequencyGrid grid(shape.grid_size());
  const double edge = spec.band_edge();
  const auto vals = shape.values();
  const double peak = *std::max_element(vals.begin(), vals.end());
  for (std::size_t m = 0; m < vals.size(); ++m)
    if (std::abs(grid.omega(m)) > edge + 1e-12 && vals[m] > 1e-12 * peak)
      throw std::invalid_argument("source PSD has mass outside [-pi/L, pi/L]");
  const double total = grid.integrate(vals);
  if (std::abs(total - spec.sigma2_x()) > 1e-3 * spec.sigma2_x())
    throw std::invalid_argument("source PSD does not integrate to sigma2_x");
}

std::vector<double> synthesize_band_limited(const BandSpec& spec, const SourceShape& shape,
                                            std::size_t n, std::uint64_t seed) {
  require_even(n, "synthesize_band_limited");
  if (shape) validate_source_shape(spec, *shape);

  const std::size_t top = last_in_band_bin(n, spec.oversampling());
  std::vector<double> weight(top + 1);
  double hermitian_sum = 0.0;
  for (std::size_t k = 0; k <= top; ++k) {
    const double w = 2.0 * pi * static_cast<double>(k) / static_cast<double>(n);
    weight[k] = shape ? shape->at(w) : 1.0;
    hermitian_sum += (k == 0 || 2 * k == n) ? weight[k] : 2.0 * weight[k];
  }
  if (!(hermitian_sum > 0.0)) throw std::invalid_argument("source shape has no in-band mass");
  // E|X_k|^2 = n w_k with (1/n) sum over all bins of w = sigma2_x.
  const double scale = spec.sigma2_x() * static_cast<double>(n) / hermitian_sum;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<std::complex<double>> spectrum(n / 2 + 1, {0.0, 0.0});
  for (std::size_t k = 0; k <= top; ++k) {
    const double var = static_cast<double>(n) * weight[k] * scale;
    if (k == 0 || 2 * k == n) {
      spectrum[k] = {std::sqrt(var) * gauss(rng), 0.0};
    } else {
      const double sd = std::sqrt(0.5 * var);
      const double re = sd * gauss(rng);
      const double im = sd * gauss(rng);
      spectrum[k] = {re, im};
    }
  }
  return fft::inverse(spectrum, n);
}

std::vector<double> lowpass_ideal(std::span<const double> x, double oversampling) {
  require_even(x.size(), "lowpass_ideal");
  if (!(oversampling >= 1.0)) throw std::invalid_argument("lowpass_ideal: L must be >= 1");
  auto spectrum = fft::forward(x);
  const std::size_t top = last_in_band_bin(x.size(), oversampling);
  for (std::size_t k = top + 1; k < spectrum.size(); ++k) spectrum[k] = {0.0, 0.0};
  return fft::inverse(spectrum, x.size());
}

// ---------------------------------------------------------------------------

namespace {

// Feedback term sum_{k=1..p} c_k N_{n-k} with zero initial memory.
double feedback(std::span<const double> taps, const std::vector<double>& noise, std::size_t n) {
  double acc = 0.0;
  const std::size_t p = std::min(taps.size(), n);
  for (std::size_t k = 1; k <= p; ++k) acc += taps[k - 1] * noise[n - k];
  return acc;
}

LoopTrace make_trace(std::span<const double> x) {
  LoopTrace t;
  t.x.assign(x.begin(), x.end());
  t.u.resize(x.size());
  t.n_err.resize(x.size());
  t.overload.assign(x.size(), 0);
  return t;
}

}  // namespace

LoopTrace run_awgn_loop(std::span<const double> x, const FirFilter& filter, double sigma2_sd,
                        double oversampling, std::uint64_t seed) {
  if (!(sigma2_sd > 0.0)) throw std::invalid_argument("run_awgn_loop: noise variance must be > 0");
  LoopTrace t = make_trace(x);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, std::sqrt(sigma2_sd));
  std::vector<double> channel_out(x.size());
  for (std::size_t n = 0; n < x.size(); ++n) {
    t.u[n] = x[n] - feedback(filter.taps(), t.n_err, n);
    t.n_err[n] = gauss(rng);
    channel_out[n] = t.u[n] + t.n_err[n];
  }
  t.xhat = lowpass_ideal(channel_out, oversampling);
  return t;
}

LoopTrace run_dithered_loop(std::span<const double> x, const FirFilter& filter,
                            const QuantizerSpec& q, double oversampling, std::uint64_t seed) {
  LoopTrace t = make_trace(x);
  t.dither.resize(x.size());
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> channel_out(x.size());
  for (std::size_t n = 0; n < x.size(); ++n) {
    t.u[n] = x[n] - feedback(filter.taps(), t.n_err, n);
    t.dither[n] = (unit(rng) - 0.5) * q.step();
    const double v = t.u[n] + t.dither[n];
    const QuantizerOutput out = quantize(q, v);
    t.n_err[n] = out.level - v;
    t.overload[n] = out.overloaded ? 1 : 0;
    channel_out[n] = out.level - t.dither[n];
  }
  t.xhat = lowpass_ideal(channel_out, oversampling);
  return t;
}

// ---------------------------------------------------------------------------

void validate(const SimConfig& cfg) {
  require_even(cfg.block_len, "SimConfig.block_len");
  if (cfg.block_len <= cfg.filter.order())
    throw std::invalid_argument("SimConfig: block length must exceed the filter order");
  if (cfg.num_blocks < 1) throw std::invalid_argument("SimConfig: need at least one block");
  if (cfg.guard && *cfg.guard >= cfg.block_len)
    throw std::invalid_argument("SimConfig: guard must be shorter than the block");
  if (const auto* awgn = std::get_if<AwgnNoise>(&cfg.noise); awgn && !(awgn->sigma2 > 0.0))
    throw std::invalid_argument("SimConfig: AWGN variance must be > 0");
  if (cfg.source_shape) validate_source_shape(cfg.spec, *cfg.source_shape);
}

namespace {

double noise_variance(const NoiseModel& noise) {
  if (const auto* awgn = std::get_if<AwgnNoise>(&noise)) return awgn->sigma2;
  return std::get<DitheredQuantizer>(noise).quantizer.sigma2();
}

struct BlockStats {
  double mse_steady = 0.0;
  double mse_full = 0.0;
  double var_u = 0.0;
  std::size_t overloads = 0;
};

BlockStats block_stats(const LoopTrace& t, std::size_t guard) {
  BlockStats s;
  const std::size_t n = t.x.size();
  double steady = 0.0, full = 0.0, u2 = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const double e = t.xhat[i] - t.x[i];
    full += e * e;
    if (i >= guard) {
      steady += e * e;
      u2 += t.u[i] * t.u[i];
    }
    s.overloads += t.overload[i];
  }
  const auto steady_n = static_cast<double>(n - guard);
  s.mse_steady = steady / steady_n;
  s.var_u = u2 / steady_n;
  s.mse_full = full / static_cast<double>(n);
  return s;
}

// Mean and standard error of i.i.d. per-block values, accumulated in index order.
class Moments {
 public:
  void add(double v) {
    ++count_;
    const double delta = v - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta * (v - mean_);
  }
  Estimate estimate() const {
    Estimate e;
    e.count = count_;
    e.mean = count_ ? mean_ : std::numeric_limits<double>::quiet_NaN();
    e.std_error = count_ > 1
                    ? std::sqrt(m2_ / static_cast<double>(count_ - 1) / static_cast<double>(count_))
                    : std::numeric_limits<double>::quiet_NaN();
    return e;
  }

 private:
  std::size_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

Estimate binomial(std::size_t hits, std::size_t trials) {
  Estimate e;
  e.count = trials;
  const double p = static_cast<double>(hits) / static_cast<double>(trials);
  e.mean = p;
  e.std_error = std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
  return e;
}

}  // namespace

LoopTrace simulate_block(const SimConfig& cfg, std::size_t block) {
  const auto x = synthesize_band_limited(cfg.spec, cfg.source_shape, cfg.block_len,
                                         derive_seed(cfg.seed, block, kSourceStream));
  const std::uint64_t noise_seed = derive_seed(cfg.seed, block, kNoiseStream);
  if (const auto* awgn = std::get_if<AwgnNoise>(&cfg.noise))
    return run_awgn_loop(x, cfg.filter, awgn->sigma2, cfg.spec.oversampling(), noise_seed);
  const auto& q = std::get<DitheredQuantizer>(cfg.noise).quantizer;
  return run_dithered_loop(x, cfg.filter, q, cfg.spec.oversampling(), noise_seed);
}

SimReport monte_carlo(const SimConfig& cfg) {
  validate(cfg);
  const std::size_t guard = cfg.guard.value_or(cfg.filter.order());
  std::vector<BlockStats> blocks(cfg.num_blocks);

  unsigned workers = cfg.threads ? cfg.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, cfg.num_blocks));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t b = next++; b < cfg.num_blocks; b = next++)
      blocks[b] = block_stats(simulate_block(cfg, b), guard);
  };
  if (workers <= 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned i = 0; i < workers; ++i) pool.emplace_back(work);
  }

  Moments conditional, all, full, var_u;
  std::size_t bad_blocks = 0, bad_samples = 0;
  for (const BlockStats& s : blocks) {
    all.add(s.mse_steady);
    full.add(s.mse_full);
    var_u.add(s.var_u);
    if (s.overloads == 0) {
      conditional.add(s.mse_steady);
    } else {
      ++bad_blocks;
      bad_samples += s.overloads;
    }
  }

  SimReport r;
  r.mse_conditional = conditional.estimate();
  r.mse_all = all.estimate();
  r.mse_full_block = full.estimate();
  r.var_u = var_u.estimate();
  r.overloaded_blocks = bad_blocks;
  r.overloaded_samples = bad_samples;
  r.overload_block_rate = binomial(bad_blocks, cfg.num_blocks);
  r.overload_sample_rate = binomial(bad_samples, cfg.num_blocks * cfg.block_len);

  const double sigma2 = noise_variance(cfg.noise);
  const RatePoint analytic = sigma_delta_rd(cfg.spec, cfg.filter, sigma2);
  r.analytic_d = analytic.distortion;
  r.analytic_rate_bits = analytic.mutual_info_bits;
  r.analytic_var_u = cfg.spec.sigma2_x() + sigma2 * total_energy(cfg.filter);
  if (const auto* dq = std::get_if<DitheredQuantizer>(&cfg.noise)) {
    r.excess_rate = dq->quantizer.rate_bits() - analytic.mutual_info_bits;
    r.bound_pol = overload_bound(*r.excess_rate, cfg.block_len);
  }
  return r;
}

double overload_rate_penalty(double p_ol, std::size_t n) {
  if (!(p_ol > 0.0 && p_ol < 1.0))
    throw std::invalid_argument("overload_rate_penalty: P_ol must lie in (0, 1)");
  if (n < 1) throw std::invalid_argument("overload_rate_penalty: block length must be >= 1");
  return 0.5 * std::log2(-(2.0 / 3.0) * std::log(p_ol / (2.0 * static_cast<double>(n))));
}

double overload_bound(double excess_rate_bits, std::size_t n) {
  return 2.0 * static_cast<double>(n) * std::exp(-1.5 * std::exp2(2.0 * excess_rate_bits));
}

}  // namespace sigdelta
