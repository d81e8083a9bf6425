#include "nilm/signal/normalize.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "nilm/dsp/sinc_interp.hpp"
#include "nilm/errors.hpp"
#include "nilm/signal/analysis.hpp"

namespace nilm::signal {

namespace {

Signature crop(const Signature& sig, std::size_t begin, std::size_t end) {
  Signature out;
  out.label = sig.label;
  out.source_id = sig.source_id;
  out.current.rate = sig.current.rate;
  out.voltage.rate = sig.voltage.rate;
  out.current.samples.assign(sig.current.samples.begin() + static_cast<std::ptrdiff_t>(begin),
                             sig.current.samples.begin() + static_cast<std::ptrdiff_t>(end));
  out.voltage.samples.assign(sig.voltage.samples.begin() + static_cast<std::ptrdiff_t>(begin),
                             sig.voltage.samples.begin() + static_cast<std::ptrdiff_t>(end));
  return out;
}

double abs_percentile(const std::vector<double>& v, double pct) {
  std::vector<double> mags(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) mags[i] = std::abs(v[i]);
  const auto idx = static_cast<std::size_t>(
      std::llround(pct * static_cast<double>(mags.size() - 1)));
  std::nth_element(mags.begin(), mags.begin() + static_cast<std::ptrdiff_t>(idx), mags.end());
  return mags[idx];
}

}  // namespace

Rejectable<Signature> extract_roi(const Signature& sig, double t_on, double period) {
  const auto rms = sliding_rms(sig.current, period);
  const std::size_t n = rms.size();

  std::size_t best_begin = 0, best_len = 0;
  std::size_t run_begin = 0, run_len = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (rms[i] >= t_on) {
      if (run_len == 0) run_begin = i;
      ++run_len;
      if (run_len > best_len) {
        best_len = run_len;
        best_begin = run_begin;
      }
    } else {
      run_len = 0;
    }
  }
  if (best_len == 0) {
    const double peak = n > 0 ? *std::max_element(rms.begin(), rms.end()) : 0.0;
    std::ostringstream msg;
    msg << "max sliding RMS " << peak << " A below activation threshold " << t_on << " A";
    return RejectionReason{RejectionCode::NoActivity, msg.str()};
  }

  auto window = static_cast<std::size_t>(std::llround(period * sig.current.rate));
  window = std::max<std::size_t>(window, 2);
  // rms[i] covers samples [i, i+window); the run [a, b) in RMS index space
  // covers samples [a, b-1+window).
  const std::size_t end = std::min(sig.current.size(), best_begin + best_len - 1 + window);
  return crop(sig, best_begin, end);
}

Rejectable<Signature> round_duration(const Signature& sig, double t_sec) {
  const double duration = sig.current.duration();
  if (duration < t_sec) {
    std::ostringstream msg;
    msg << "duration " << duration << " s below minimum " << t_sec << " s";
    return RejectionReason{RejectionCode::TooShort, msg.str()};
  }
  const double whole = std::floor(duration);
  if (whole < 1.0)
    return RejectionReason{RejectionCode::TooShort,
                           "duration below one whole second after flooring"};
  const auto keep = static_cast<std::size_t>(std::llround(whole * sig.current.rate));
  if (keep >= sig.current.size()) return sig;
  return crop(sig, 0, keep);
}

Waveform time_stretch(const Waveform& w, double factor) {
  if (factor < 0.5 || factor > 2.0)
    throw std::invalid_argument("time_stretch: factor outside [0.5, 2.0]");
  Waveform out;
  out.rate = w.rate;
  out.samples = dsp::stretch_sinc(w.samples, factor);
  return out;
}

Waveform resample(const Waveform& w, double to_rate) {
  if (to_rate > w.rate * (1.0 + 1e-9))
    throw std::invalid_argument("resample: to_rate above input rate");
  Waveform out;
  out.rate = to_rate;
  out.samples = dsp::resample_sinc(w.samples, w.rate, to_rate);
  return out;
}

Signature scale_to_reference(const Signature& sig, double v_ref) {
  const double peak = abs_percentile(sig.voltage.samples, 0.999);
  if (peak <= 0.0) throw ZeroVoltageError("scale_to_reference: zero voltage peak");
  const double scale = v_ref / peak;
  Signature out = sig;
  for (double& v : out.voltage.samples) v *= scale;
  for (double& i : out.current.samples) i /= scale;
  return out;
}

Rejectable<Signature> normalize_signature(const Signature& raw,
                                          const NormalizationConfig& cfg) {
  cfg.validate();
  validate_signature(raw);
  if (cfg.f_down > raw.current.rate * (1.0 + 1e-9))
    throw DataError("normalize_signature: f_down above signature rate (" + raw.source_id + ")");

  // Step 1: voltage quality control.
  const double f0 = estimate_fundamental(raw.voltage);
  const auto max_harmonics =
      static_cast<int>(std::floor((raw.voltage.rate / 2.0 - 1e-6) / f0)) - 1;
  const int n_harmonics = std::clamp(max_harmonics, 1, 19);
  const double thd = compute_thd(raw.voltage, f0, n_harmonics);
  if (thd > cfg.t_thd) {
    std::ostringstream msg;
    msg << "step 1: voltage THD " << thd << " exceeds " << cfg.t_thd;
    return RejectionReason{RejectionCode::HighThd, msg.str()};
  }

  // Step 2: region of interest from the sliding one-period RMS mask.
  auto roi = extract_roi(raw, cfg.t_on, 1.0 / f0);
  if (is_rejected(roi)) {
    auto r = rejection(roi);
    r.detail = "step 2: " + r.detail;
    return r;
  }

  // Step 3: duration gate and whole-second rounding.
  auto rounded = round_duration(value(roi), cfg.t_sec);
  if (is_rejected(rounded)) {
    auto r = rejection(rounded);
    r.detail = "step 3: " + r.detail;
    return r;
  }
  Signature sig = value(rounded);

  // Step 4: frequency normalization by f0/f_ref at the original rate.
  const double factor = f0 / cfg.f_ref;
  sig.current = time_stretch(sig.current, factor);
  sig.voltage = time_stretch(sig.voltage, factor);

  // Step 5: downsampling.
  sig.current = resample(sig.current, cfg.f_down);
  sig.voltage = resample(sig.voltage, cfg.f_down);

  // Stretching rescales the duration, so re-crop to whole seconds.
  const double stretched = sig.current.duration();
  const double whole = std::floor(stretched + 1e-9);
  if (whole < 1.0 || whole < cfg.t_sec)
    return RejectionReason{RejectionCode::TooShort,
                           "step 4: duration below minimum after frequency normalization"};
  const auto keep = static_cast<std::size_t>(std::llround(whole * cfg.f_down));
  if (keep < sig.current.size()) {
    sig.current.samples.resize(keep);
    sig.voltage.samples.resize(keep);
  }

  // Step 6: scale to the reference voltage, preserving power.
  return scale_to_reference(sig, cfg.v_ref);
}

}  // namespace nilm::signal
