#include "sigdelta/fft.hpp"

#include <fftw3.h>

#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>

namespace sigdelta::fft {
namespace {

struct Plans {
  fftw_plan r2c = nullptr;
  fftw_plan c2r = nullptr;
};

// The FFTW planner is not reentrant; execution of an existing plan on new
// arrays is. Plans are created once per size and never destroyed.
class PlanCache {
 public:
  const Plans& get(std::size_t n) {
    std::lock_guard lock(mutex_);
    auto it = plans_.find(n);
    if (it != plans_.end()) return it->second;

    const int len = static_cast<int>(n);
    double* in = fftw_alloc_real(n);
    fftw_complex* out = fftw_alloc_complex(n / 2 + 1);
    Plans p;
    const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
    p.r2c = fftw_plan_dft_r2c_1d(len, in, out, flags);
    p.c2r = fftw_plan_dft_c2r_1d(len, out, in, flags | FFTW_DESTROY_INPUT);
    fftw_free(in);
    fftw_free(out);
    if (p.r2c == nullptr || p.c2r == nullptr) throw std::runtime_error("fft: planning failed");
    return plans_.emplace(n, p).first->second;
  }

 private:
  std::mutex mutex_;
  std::map<std::size_t, Plans> plans_;
};

PlanCache& cache() {
  static PlanCache instance;
  return instance;
}

}  // namespace

std::vector<std::complex<double>> forward(std::span<const double> x) {
  const std::size_t n = x.size();
  if (n == 0) throw std::invalid_argument("fft: empty input");
  const Plans& plans = cache().get(n);
  std::vector<double> in(x.begin(), x.end());
  std::vector<std::complex<double>> out(n / 2 + 1);
  fftw_execute_dft_r2c(plans.r2c, in.data(), reinterpret_cast<fftw_complex*>(out.data()));
  return out;
}

std::vector<double> inverse(std::span<const std::complex<double>> spectrum, std::size_t n) {
  if (n == 0 || spectrum.size() != n / 2 + 1)
    throw std::invalid_argument("fft: spectrum size does not match n/2 + 1");
  const Plans& plans = cache().get(n);
  std::vector<std::complex<double>> in(spectrum.begin(), spectrum.end());
  std::vector<double> out(n);
  fftw_execute_dft_c2r(plans.c2r, reinterpret_cast<fftw_complex*>(in.data()), out.data());
  const double scale = 1.0 / static_cast<double>(n);
  for (double& v : out) v *= scale;
  return out;
}

}  // namespace sigdelta::fft
