#pragma once

// Thin real-to-complex FFT layer over FFTW with a process-wide plan cache.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace sigdelta::fft {

/// Forward transform X_k = sum_t x_t e^{-2 pi i k t / n}, bins k = 0..n/2.
std::vector<std::complex<double>> forward(std::span<const double> x);

/// Inverse of forward(): x_t = (1/n) sum_k X_k e^{2 pi i k t / n} over the full
/// Hermitian extension of the n/2 + 1 given bins.
std::vector<double> inverse(std::span<const std::complex<double>> spectrum, std::size_t n);

}  // namespace sigdelta::fft
