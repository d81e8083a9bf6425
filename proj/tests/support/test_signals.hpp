#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "nilm/signal/types.hpp"

namespace nilm::testing {

constexpr double kPi = 3.14159265358979323846;

inline signal::Waveform make_tone(double freq, double rate, double duration, double amp = 1.0,
                                  double phase = 0.0) {
  signal::Waveform w;
  w.rate = rate;
  const auto n = static_cast<std::size_t>(std::llround(duration * rate));
  w.samples.resize(n);
  for (std::size_t i = 0; i < n; ++i)
    w.samples[i] = amp * std::sin(2.0 * kPi * freq * static_cast<double>(i) / rate + phase);
  return w;
}

inline void add_tone(signal::Waveform& w, double freq, double amp, double phase = 0.0) {
  for (std::size_t i = 0; i < w.samples.size(); ++i)
    w.samples[i] += amp * std::sin(2.0 * kPi * freq * static_cast<double>(i) / w.rate + phase);
}

inline signal::Signature make_signature(const std::string& label, double grid_hz, double rate,
                                        double duration, double current_amp,
                                        double voltage_peak, const std::string& source_id) {
  signal::Signature sig;
  sig.label = label;
  sig.source_id = source_id;
  sig.current = make_tone(grid_hz, rate, duration, current_amp);
  sig.voltage = make_tone(grid_hz, rate, duration, voltage_peak);
  return sig;
}

// Single-bin DTFT magnitude at an exact frequency: |sum x[n] e^{-2pi i f n/fs}|.
// Independent of the FFT-based production path.
inline double goertzel_magnitude(const std::vector<double>& x, double freq, double rate) {
  std::complex<double> acc(0.0, 0.0);
  for (std::size_t n = 0; n < x.size(); ++n) {
    const double angle = -2.0 * kPi * freq * static_cast<double>(n) / rate;
    acc += x[n] * std::complex<double>(std::cos(angle), std::sin(angle));
  }
  return std::abs(acc);
}

// Least-squares amplitude of a tone at `freq` over [begin, end).
inline double fit_amplitude(const std::vector<double>& x, std::size_t begin, std::size_t end,
                            double freq, double rate) {
  double ss = 0.0, sc = 0.0;
  for (std::size_t n = begin; n < end; ++n) {
    const double angle = 2.0 * kPi * freq * static_cast<double>(n) / rate;
    ss += x[n] * std::sin(angle);
    sc += x[n] * std::cos(angle);
  }
  const double half = static_cast<double>(end - begin) / 2.0;
  return std::sqrt(ss * ss + sc * sc) / half;
}

inline double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const std::size_t n = std::min(a.size(), b.size());
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return dot / std::sqrt(na * nb);
}

}  // namespace nilm::testing
