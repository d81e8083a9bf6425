#include "nilm/signal/types.hpp"

#include <cmath>

#include "nilm/errors.hpp"

namespace nilm::signal {

void validate_signature(const Signature& sig, bool check_finite) {
  if (sig.label.empty()) throw DataError("signature: empty label (" + sig.source_id + ")");
  if (sig.current.rate <= 0.0 || sig.voltage.rate <= 0.0)
    throw DataError("signature: non-positive sample rate (" + sig.source_id + ")");
  if (sig.current.rate != sig.voltage.rate)
    throw DataError("signature: current/voltage rate mismatch (" + sig.source_id + ")");
  if (sig.current.size() != sig.voltage.size())
    throw DataError("signature: current/voltage length mismatch (" + sig.source_id + ")");
  if (sig.current.size() == 0)
    throw DataError("signature: empty waveforms (" + sig.source_id + ")");
  if (check_finite) {
    for (const double v : sig.current.samples)
      if (!std::isfinite(v))
        throw DataError("signature: non-finite current sample (" + sig.source_id + ")");
    for (const double v : sig.voltage.samples)
      if (!std::isfinite(v))
        throw DataError("signature: non-finite voltage sample (" + sig.source_id + ")");
  }
}

void NormalizationConfig::validate() const {
  if (t_thd <= 0.0 || t_thd >= 1.0) throw ConfigError("normalization: t_thd must be in (0,1)");
  if (t_on <= 0.0) throw ConfigError("normalization: t_on must be positive");
  if (t_sec <= 0.0) throw ConfigError("normalization: t_sec must be positive");
  if (f_ref <= 0.0) throw ConfigError("normalization: f_ref must be positive");
  if (f_down <= 0.0) throw ConfigError("normalization: f_down must be positive");
  if (v_ref <= 0.0) throw ConfigError("normalization: v_ref must be positive");
}

const char* to_string(RejectionCode code) {
  switch (code) {
    case RejectionCode::HighThd: return "HighTHD";
    case RejectionCode::TooShort: return "TooShort";
    case RejectionCode::NoActivity: return "NoActivity";
  }
  return "Unknown";
}

}  // namespace nilm::signal
