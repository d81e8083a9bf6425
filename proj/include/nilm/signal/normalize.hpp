#pragma once

#include "nilm/signal/types.hpp"

namespace nilm::signal {

// Longest contiguous run where the sliding RMS of the current stays at or
// above t_on, cropped on both channels. Rejects with NoActivity when no
// sample qualifies.
Rejectable<Signature> extract_roi(const Signature& sig, double t_on, double period);

// Crop to a whole number of seconds; reject with TooShort when the duration
// is below t_sec (or below one second, the minimum whole-second crop).
Rejectable<Signature> round_duration(const Signature& sig, double t_sec);

// Band-limited speed change. Output duration = input duration * factor; a
// tone at f re-measures at f/factor when read back at the original rate.
// Accepts factor in [0.5, 2.0].
Waveform time_stretch(const Waveform& w, double factor);

// Anti-aliased downsampling to to_rate (<= w.rate), cutoff 0.45*to_rate.
Waveform resample(const Waveform& w, double to_rate);

// Scale voltage so its peak (99.9th percentile of |v|) equals v_ref, and
// divide the current by the same factor so instantaneous power is preserved.
Signature scale_to_reference(const Signature& sig, double v_ref);

// Full six-step pipeline: THD gate -> ROI -> duration gate -> frequency
// normalization -> downsampling -> voltage scaling. The output is at
// cfg.f_down, a whole number of seconds long, with fundamental cfg.f_ref and
// voltage peak cfg.v_ref.
Rejectable<Signature> normalize_signature(const Signature& raw,
                                          const NormalizationConfig& cfg);

}  // namespace nilm::signal
