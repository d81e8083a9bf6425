#pragma once

#include <string>
#include <variant>
#include <vector>

namespace nilm::signal {

struct Waveform {
  std::vector<double> samples;
  double rate = 0.0;  // Hz

  std::size_t size() const { return samples.size(); }
  double duration() const { return rate > 0.0 ? static_cast<double>(samples.size()) / rate : 0.0; }
};

// One appliance recording: paired current/voltage waveforms plus provenance.
struct Signature {
  std::string label;
  Waveform current;  // amperes
  Waveform voltage;  // volts
  std::string source_id;
};

// Throws DataError if the invariants do not hold (matching rates and sample
// counts, non-empty label, finite samples when check_finite is set).
void validate_signature(const Signature& sig, bool check_finite = false);

struct NormalizationConfig {
  double t_thd = 0.1;     // voltage THD gate (ratio)
  double t_on = 0.1;      // activation threshold (A RMS)
  double t_sec = 1.0;     // minimum duration (s)
  double f_ref = 50.0;    // reference mains frequency (Hz)
  double f_down = 4000.0; // target sample rate (Hz)
  double v_ref = 311.0;   // reference voltage peak (V)

  void validate() const;  // throws ConfigError
};

enum class RejectionCode { HighThd, TooShort, NoActivity };

const char* to_string(RejectionCode code);

struct RejectionReason {
  RejectionCode code;
  std::string detail;
};

template <typename T>
using Rejectable = std::variant<T, RejectionReason>;

template <typename T>
bool is_rejected(const Rejectable<T>& r) {
  return std::holds_alternative<RejectionReason>(r);
}

template <typename T>
const RejectionReason& rejection(const Rejectable<T>& r) {
  return std::get<RejectionReason>(r);
}

template <typename T>
const T& value(const Rejectable<T>& r) {
  return std::get<T>(r);
}

}  // namespace nilm::signal
