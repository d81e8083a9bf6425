#include "nilm/dsp/fft.hpp"

#include <fftw3.h>

#include <map>
#include <mutex>
#include <stdexcept>

namespace nilm::dsp {

namespace {

// FFTW plan creation is not thread-safe; execution via the new-array API is,
// as long as the arrays match the planned alignment (fftw_malloc everywhere).
struct PlanCache {
  std::mutex mu;
  std::map<std::size_t, fftw_plan> plans;

  fftw_plan get(std::size_t n, double* in, fftw_complex* out) {
    std::lock_guard<std::mutex> lock(mu);
    auto it = plans.find(n);
    if (it != plans.end()) return it->second;
    fftw_plan p = fftw_plan_dft_r2c_1d(static_cast<int>(n), in, out, FFTW_ESTIMATE);
    plans.emplace(n, p);
    return p;
  }
};

PlanCache& cache() {
  static PlanCache c;
  return c;
}

struct FftwBuffer {
  double* in = nullptr;
  fftw_complex* out = nullptr;
  std::size_t n = 0;

  explicit FftwBuffer(std::size_t size) : n(size) {
    in = static_cast<double*>(fftw_malloc(sizeof(double) * n));
    out = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1)));
    if (!in || !out) throw std::bad_alloc();
  }
  ~FftwBuffer() {
    fftw_free(in);
    fftw_free(out);
  }
  FftwBuffer(const FftwBuffer&) = delete;
  FftwBuffer& operator=(const FftwBuffer&) = delete;
};

}  // namespace

std::vector<std::complex<double>> rfft(const double* x, std::size_t n) {
  if (n == 0) throw std::invalid_argument("rfft: empty input");
  FftwBuffer buf(n);
  for (std::size_t i = 0; i < n; ++i) buf.in[i] = x[i];
  fftw_plan plan = cache().get(n, buf.in, buf.out);
  fftw_execute_dft_r2c(plan, buf.in, buf.out);
  std::vector<std::complex<double>> result(n / 2 + 1);
  for (std::size_t i = 0; i < result.size(); ++i)
    result[i] = std::complex<double>(buf.out[i][0], buf.out[i][1]);
  return result;
}

}  // namespace nilm::dsp
