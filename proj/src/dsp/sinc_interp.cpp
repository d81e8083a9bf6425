#include "nilm/dsp/sinc_interp.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>

namespace nilm::dsp {

namespace {

constexpr double kPi = 3.14159265358979323846;
constexpr double kKaiserBeta = 9.0;   // ~90 dB stopband
constexpr int kZeroCrossings = 48;    // sinc lobes per kernel side
constexpr int kTableOversample = 512; // kernel samples per input-sample spacing

double sinc(double u) {
  if (std::abs(u) < 1e-12) return 1.0;
  return std::sin(kPi * u) / (kPi * u);
}

// Kaiser-windowed sinc low-pass, tabulated once per cutoff and linearly
// interpolated at lookup time. Cutoff nu is in cycles per input sample.
struct Kernel {
  double cutoff = 0.0;
  double half_width = 0.0;  // in input samples
  std::vector<double> table; // h(t), t = i / kTableOversample, i = 0..len-1

  explicit Kernel(double nu) : cutoff(nu) {
    half_width = kZeroCrossings / (2.0 * nu);
    const std::size_t len =
        static_cast<std::size_t>(std::ceil(half_width * kTableOversample)) + 2;
    table.resize(len);
    const double i0_beta = std::cyl_bessel_i(0.0, kKaiserBeta);
    for (std::size_t i = 0; i < len; ++i) {
      const double t = static_cast<double>(i) / kTableOversample;
      if (t > half_width) {
        table[i] = 0.0;
        continue;
      }
      const double frac = t / half_width;
      const double window =
          std::cyl_bessel_i(0.0, kKaiserBeta * std::sqrt(std::max(0.0, 1.0 - frac * frac))) /
          i0_beta;
      table[i] = 2.0 * nu * sinc(2.0 * nu * t) * window;
    }
  }

  double eval(double t) const {
    t = std::abs(t);
    if (t >= half_width) return 0.0;
    const double pos = t * kTableOversample;
    const std::size_t i = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(i);
    return table[i] * (1.0 - frac) + table[i + 1] * frac;
  }
};

std::shared_ptr<const Kernel> kernel_for(double cutoff) {
  static std::mutex mu;
  static std::map<long long, std::shared_ptr<const Kernel>> cache;
  const long long key = std::llround(cutoff * 1e9);
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto k = std::make_shared<const Kernel>(cutoff);
  cache.emplace(key, k);
  return k;
}

// y[m] = sum_k x[k] h(k - m*step), normalized so a constant input maps to
// itself exactly. Samples outside x count as zeros but keep their kernel
// weight, so the signal tapers at the edges instead of being renormalized
// from partial data.
std::vector<double> interpolate(const std::vector<double>& x, double step,
                                std::size_t out_len) {
  const double cutoff = 0.45 * std::min(1.0, 1.0 / step);
  const auto kernel = kernel_for(cutoff);
  const double hw = kernel->half_width;
  const auto n = static_cast<std::ptrdiff_t>(x.size());

  std::vector<double> y(out_len, 0.0);
  for (std::size_t m = 0; m < out_len; ++m) {
    const double center = static_cast<double>(m) * step;
    const auto k_lo = static_cast<std::ptrdiff_t>(std::ceil(center - hw));
    const auto k_hi = static_cast<std::ptrdiff_t>(std::floor(center + hw));
    double acc = 0.0;
    double wsum = 0.0;
    for (std::ptrdiff_t k = k_lo; k <= k_hi; ++k) {
      const double w = kernel->eval(static_cast<double>(k) - center);
      wsum += w;
      if (k >= 0 && k < n) acc += x[static_cast<std::size_t>(k)] * w;
    }
    y[m] = wsum > 0.0 ? acc / wsum : 0.0;
  }
  return y;
}

}  // namespace

std::vector<double> resample_sinc(const std::vector<double>& x, double in_rate,
                                  double out_rate) {
  if (in_rate <= 0.0 || out_rate <= 0.0)
    throw std::invalid_argument("resample_sinc: rates must be positive");
  if (x.empty()) return {};
  if (in_rate == out_rate) return x;
  const auto out_len = static_cast<std::size_t>(
      std::llround(static_cast<double>(x.size()) * out_rate / in_rate));
  return interpolate(x, in_rate / out_rate, out_len);
}

std::vector<double> stretch_sinc(const std::vector<double>& x, double factor) {
  if (factor <= 0.0) throw std::invalid_argument("stretch_sinc: factor must be positive");
  if (x.empty()) return {};
  if (factor == 1.0) return x;
  const auto out_len =
      static_cast<std::size_t>(std::llround(static_cast<double>(x.size()) * factor));
  return interpolate(x, 1.0 / factor, out_len);
}

}  // namespace nilm::dsp
