#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace nilm::dsp {

// Forward real-to-complex DFT, X[b] = sum_n x[n] * exp(-2*pi*i*b*n/N).
// Returns N/2+1 bins. Backed by FFTW; plans are cached per size and execution
// is thread-safe (each call uses its own buffers).
std::vector<std::complex<double>> rfft(const double* x, std::size_t n);

inline std::vector<std::complex<double>> rfft(const std::vector<double>& x) {
  return rfft(x.data(), x.size());
}

}  // namespace nilm::dsp
