#include "nilm/signal/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <string>

#include "nilm/dsp/fft.hpp"
#include "nilm/errors.hpp"

namespace nilm::signal {

namespace {

constexpr double kPi = 3.14159265358979323846;

std::vector<double> hann_window(std::size_t n) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i)
    w[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(i) / static_cast<double>(n));
  return w;
}

// Parabolic vertex offset from three samples around a peak, clamped to half a
// bin. Returns 0 when the neighborhood is degenerate.
double parabolic_offset(double ym1, double y0, double yp1) {
  const double denom = ym1 - 2.0 * y0 + yp1;
  if (std::abs(denom) < 1e-300) return 0.0;
  double delta = 0.5 * (ym1 - yp1) / denom;
  return std::clamp(delta, -0.5, 0.5);
}

}  // namespace

double estimate_fundamental(const Waveform& voltage, double band_lo, double band_hi) {
  const std::size_t n = voltage.size();
  if (n < 4 || voltage.rate <= 0.0)
    throw std::invalid_argument("estimate_fundamental: degenerate waveform");
  if (band_hi <= band_lo)
    throw BandEmptyError("estimate_fundamental: empty band");

  const auto window = hann_window(n);
  std::vector<double> x(n);
  for (std::size_t i = 0; i < n; ++i) x[i] = voltage.samples[i] * window[i];
  const auto spec = dsp::rfft(x);

  const double df = voltage.rate / static_cast<double>(n);
  const auto k_lo = static_cast<std::size_t>(std::ceil(band_lo / df));
  const auto k_hi = std::min(spec.size() - 1,
                             static_cast<std::size_t>(std::floor(band_hi / df)));
  if (k_lo > k_hi)
    throw BandEmptyError("estimate_fundamental: no spectral bin in [" +
                         std::to_string(band_lo) + ", " + std::to_string(band_hi) + "] Hz");

  std::size_t k_max = k_lo;
  double best = -1.0;
  for (std::size_t k = k_lo; k <= k_hi; ++k) {
    const double mag = std::abs(spec[k]);
    if (mag > best) {
      best = mag;
      k_max = k;
    }
  }

  // Quadratic interpolation on log magnitude; near-exact for windowed tones.
  double delta = 0.0;
  if (k_max > 0 && k_max + 1 < spec.size()) {
    const double eps = 1e-300;
    const double ym1 = std::log(std::abs(spec[k_max - 1]) + eps);
    const double y0 = std::log(std::abs(spec[k_max]) + eps);
    const double yp1 = std::log(std::abs(spec[k_max + 1]) + eps);
    delta = parabolic_offset(ym1, y0, yp1);
  }
  return (static_cast<double>(k_max) + delta) * df;
}

double compute_thd(const Waveform& voltage, double f0, int n_harmonics) {
  const std::size_t n = voltage.size();
  if (n < 4 || voltage.rate <= 0.0)
    throw std::invalid_argument("compute_thd: degenerate waveform");
  if (f0 <= 0.0) throw std::invalid_argument("compute_thd: f0 must be positive");
  if (n_harmonics < 1) throw std::invalid_argument("compute_thd: need at least one harmonic");
  if (f0 * (n_harmonics + 1) >= voltage.rate / 2.0)
    throw std::invalid_argument("compute_thd: harmonic range exceeds Nyquist");

  // Rectangular window: harmonics of an integer-period tone land on exact
  // bins where the Dirichlet kernel of the fundamental is identically zero.
  const auto spec = dsp::rfft(voltage.samples);
  const double df = voltage.rate / static_cast<double>(n);

  const auto magnitude_at = [&](double freq) {
    auto k = static_cast<std::size_t>(std::llround(freq / df));
    k = std::clamp<std::size_t>(k, 1, spec.size() - 2);
    const double ym1 = std::abs(spec[k - 1]);
    const double y0 = std::abs(spec[k]);
    const double yp1 = std::abs(spec[k + 1]);
    // Refine on linear magnitude so exact-bin tones (zero neighbors) pass
    // through untouched.
    const double delta = parabolic_offset(ym1, y0, yp1);
    const double peak = y0 - 0.25 * (ym1 - yp1) * delta;
    return std::max(peak, 0.0);
  };

  const double m1 = magnitude_at(f0);
  if (m1 <= 0.0) return std::numeric_limits<double>::infinity();

  double sum_sq = 0.0;
  for (int h = 2; h <= n_harmonics + 1; ++h) {
    const double mh = magnitude_at(f0 * h);
    sum_sq += mh * mh;
  }
  return std::sqrt(sum_sq) / m1;
}

std::vector<double> sliding_rms(const Waveform& current, double period) {
  const std::size_t n = current.size();
  if (n == 0) return {};
  auto w = static_cast<std::size_t>(std::llround(period * current.rate));
  w = std::max<std::size_t>(w, 2);
  if (w > n) w = n;

  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i)
    prefix[i + 1] = prefix[i] + current.samples[i] * current.samples[i];

  std::vector<double> out(n);
  const std::size_t last = n - w;
  for (std::size_t i = 0; i <= last; ++i)
    out[i] = std::sqrt((prefix[i + w] - prefix[i]) / static_cast<double>(w));
  for (std::size_t i = last + 1; i < n; ++i) out[i] = out[last];
  return out;
}

}  // namespace nilm::signal
