#pragma once

#include <vector>

#include "nilm/signal/types.hpp"

namespace nilm::signal {

// Frequency of the largest spectral peak of `voltage` inside
// [band_lo, band_hi] Hz, refined by parabolic interpolation of the peak bin.
// Throws BandEmptyError when no bin falls in the band.
double estimate_fundamental(const Waveform& voltage, double band_lo = 40.0,
                            double band_hi = 70.0);

// Total harmonic distortion referenced to the fundamental:
// sqrt(sum_{h=2..n_harmonics+1} M_h^2) / M_1, with M_h the spectral magnitude
// at h*f0 (nearest bin, parabolic peak refinement). Requires
// f0*(n_harmonics+1) below Nyquist.
double compute_thd(const Waveform& voltage, double f0, int n_harmonics);

// One RMS value per sample position over a window of `period` seconds
// advancing one sample at a time; trailing positions repeat the last full
// window.
std::vector<double> sliding_rms(const Waveform& current, double period);

}  // namespace nilm::signal
