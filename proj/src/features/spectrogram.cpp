#include "nilm/features/spectrogram.hpp"

#include <cmath>

#include "nilm/dsp/fft.hpp"
#include "nilm/errors.hpp"

namespace nilm::features {

namespace {

constexpr double kPi = 3.14159265358979323846;

// Reflection without repeating the edge sample: ... x2 x1 | x0 x1 x2 ...
std::size_t reflect_index(std::ptrdiff_t i, std::ptrdiff_t n) {
  const std::ptrdiff_t span = 2 * (n - 1);
  i = ((i % span) + span) % span;
  if (i >= n) i = span - i;
  return static_cast<std::size_t>(i);
}

}  // namespace

void StftConfig::validate(double rate) const {
  if (window_len <= 0.0 || hop <= 0.0) throw ConfigError("stft: window and hop must be positive");
  if (hop > window_len) throw ConfigError("stft: hop must not exceed window length");
  const double win_samples = window_len * rate;
  if (std::abs(win_samples - std::round(win_samples)) > 1e-6)
    throw ConfigError("stft: window length times rate must be integral");
  const double hop_samples = hop * rate;
  if (std::abs(hop_samples - std::round(hop_samples)) > 1e-6)
    throw ConfigError("stft: hop times rate must be integral");
}

ComplexFrames stft(const signal::Waveform& x, const StftConfig& cfg) {
  cfg.validate(x.rate);
  const auto win = static_cast<std::size_t>(std::llround(cfg.window_len * x.rate));
  const auto hop = static_cast<std::size_t>(std::llround(cfg.hop * x.rate));
  const std::size_t len = x.size();
  if (len < 2 || (cfg.padding == Padding::None && len < win))
    throw TooShortError("stft: signal shorter than one analysis window");

  std::vector<double> window(win, 1.0);
  if (cfg.window_fn == WindowFn::Hann) {
    for (std::size_t i = 0; i < win; ++i)
      window[i] = 0.5 - 0.5 * std::cos(2.0 * kPi * static_cast<double>(i) /
                                       static_cast<double>(win));
  }

  std::size_t t;
  std::ptrdiff_t start0;
  if (cfg.padding == Padding::Center) {
    t = len / hop + 1;
    start0 = -static_cast<std::ptrdiff_t>(win / 2);
  } else {
    t = (len - win) / hop + 1;
    start0 = 0;
  }
  const std::size_t v = win / 2 + 1;

  ComplexFrames frames;
  frames.t = static_cast<int>(t);
  frames.v = static_cast<int>(v);
  frames.data.resize(t * v);

  std::vector<double> buf(win);
  const auto n = static_cast<std::ptrdiff_t>(len);
  for (std::size_t f = 0; f < t; ++f) {
    const std::ptrdiff_t start = start0 + static_cast<std::ptrdiff_t>(f * hop);
    for (std::size_t i = 0; i < win; ++i) {
      const std::ptrdiff_t idx = start + static_cast<std::ptrdiff_t>(i);
      double sample;
      if (idx >= 0 && idx < n) {
        sample = x.samples[static_cast<std::size_t>(idx)];
      } else if (cfg.padding == Padding::Center) {
        sample = x.samples[reflect_index(idx, n)];
      } else {
        sample = 0.0;
      }
      buf[i] = sample * window[i];
    }
    const auto spec = dsp::rfft(buf);
    for (std::size_t b = 0; b < v; ++b)
      frames.data[f * v + b] = spec[b];
  }
  return frames;
}

Spectrogram spectrogram(const signal::Waveform& x, const StftConfig& cfg,
                        const std::string& source_id) {
  const auto frames = stft(x, cfg);
  Spectrogram spec;
  spec.source_id = source_id;
  spec.data.resize(frames.t, frames.v);
  for (int f = 0; f < frames.t; ++f) {
    for (int b = 0; b < frames.v; ++b) {
      const double mag = std::abs(frames.at(f, b));
      spec.data(f, b) = cfg.scale == Scale::LogMagnitude ? std::log1p(mag) : mag;
    }
  }
  return spec;
}

Spectrogram spectrogram(const sns::AggregateExample& example, const StftConfig& cfg) {
  return spectrogram(example.current, cfg, "example-" + std::to_string(example.id));
}

void FeatureStatsAccumulator::add(const Spectrogram& spec) {
  if (mean_.size() == 0) {
    mean_ = Eigen::VectorXd::Zero(spec.v());
    m2_ = Eigen::VectorXd::Zero(spec.v());
  }
  if (spec.v() != mean_.size())
    throw ShapeMismatchError("feature stats: spectrogram bin count mismatch");
  for (int f = 0; f < spec.t(); ++f) {
    ++count_;
    const Eigen::VectorXd row = spec.data.row(f).transpose();
    const Eigen::VectorXd delta = row - mean_;
    mean_ += delta / static_cast<double>(count_);
    m2_ += delta.cwiseProduct(row - mean_);
  }
  ++examples_;
}

FeatureStats FeatureStatsAccumulator::finalize(std::uint64_t config_hash) const {
  if (examples_ < 2)
    throw DataError("feature stats: need at least two examples");
  FeatureStats stats;
  stats.config_hash = config_hash;
  stats.mean = mean_;
  stats.stddev = (m2_ / static_cast<double>(count_)).cwiseSqrt().cwiseMax(1e-6);
  return stats;
}

Spectrogram normalize_spectrogram(const Spectrogram& spec, const FeatureStats& stats) {
  if (spec.v() != stats.mean.size())
    throw ShapeMismatchError("normalize_spectrogram: bin count mismatch");
  Spectrogram out;
  out.source_id = spec.source_id;
  out.data = (spec.data.rowwise() - stats.mean.transpose()).array().rowwise() /
             stats.stddev.transpose().array();
  return out;
}

}  // namespace nilm::features
