#pragma once

#include <cstddef>
#include <vector>

namespace nilm::dsp {

// Band-limited sample rate conversion with a Kaiser-windowed sinc kernel.
// Anti-alias cutoff sits at 0.45x the lower of the two rates. Output length
// is round(n * out_rate / in_rate); out_rate == in_rate is an exact copy.
std::vector<double> resample_sinc(const std::vector<double>& x, double in_rate,
                                  double out_rate);

// Band-limited speed change: y[m] = x(m / factor) with output length
// round(n * factor). Duration scales by `factor`, every frequency scales by
// 1/factor when the output is read at the original sample rate.
std::vector<double> stretch_sinc(const std::vector<double>& x, double factor);

}  // namespace nilm::dsp
