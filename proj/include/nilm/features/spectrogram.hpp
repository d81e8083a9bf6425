#pragma once

#include <Eigen/Core>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "nilm/signal/types.hpp"
#include "nilm/sns/types.hpp"

namespace nilm::features {

enum class WindowFn : std::uint32_t { Hann = 0, Rect = 1 };
enum class Padding : std::uint32_t { Center = 0, None = 1 };
enum class Scale : std::uint32_t { LogMagnitude = 0, Magnitude = 1 };

struct StftConfig {
  double window_len = 0.1;  // seconds (5 mains periods)
  double hop = 0.02;        // seconds (1 period)
  WindowFn window_fn = WindowFn::Hann;
  Padding padding = Padding::Center;
  Scale scale = Scale::LogMagnitude;

  void validate(double rate) const;  // throws ConfigError
};

struct ComplexFrames {
  // Row f = frame, column b = frequency bin; t rows, v = N/2+1 columns.
  std::vector<std::complex<double>> data;
  int t = 0;
  int v = 0;

  std::complex<double>& at(int f, int b) { return data[static_cast<std::size_t>(f) * v + b]; }
  const std::complex<double>& at(int f, int b) const {
    return data[static_cast<std::size_t>(f) * v + b];
  }
};

struct Spectrogram {
  Eigen::MatrixXd data;  // t x v
  std::string source_id;

  int t() const { return static_cast<int>(data.rows()); }
  int v() const { return static_cast<int>(data.cols()); }
};

// Frame f, bin b = sum_n x[f*hop + n] * w[n] * exp(-2*pi*i*b*n/N).
// Center padding reflects window/2 samples at both ends so t = len/hop + 1.
// Throws TooShortError when the signal cannot fill a single window.
ComplexFrames stft(const signal::Waveform& x, const StftConfig& cfg);

Spectrogram spectrogram(const signal::Waveform& x, const StftConfig& cfg,
                        const std::string& source_id = "");

Spectrogram spectrogram(const sns::AggregateExample& example, const StftConfig& cfg);

struct FeatureStats {
  Eigen::VectorXd mean;    // per frequency bin
  Eigen::VectorXd stddev;  // epsilon-floored
  std::uint64_t config_hash = 0;
};

// Single-pass Welford accumulator over all frames of all spectrograms.
class FeatureStatsAccumulator {
 public:
  void add(const Spectrogram& spec);
  // Population standard deviation with a 1e-6 floor. Requires >= 2 samples.
  FeatureStats finalize(std::uint64_t config_hash = 0) const;
  std::int64_t examples() const { return examples_; }

 private:
  std::int64_t examples_ = 0;
  std::int64_t count_ = 0;  // frames seen
  Eigen::VectorXd mean_;
  Eigen::VectorXd m2_;
};

// (x - mean) / std per bin. Throws ShapeMismatchError on bin count mismatch.
Spectrogram normalize_spectrogram(const Spectrogram& spec, const FeatureStats& stats);

}  // namespace nilm::features
