#include "nilm/cli/toygen.hpp"

#include <cmath>
#include <cstdio>

#include "nilm/errors.hpp"
#include "nilm/util/hash.hpp"
#include "nilm/util/rng.hpp"

namespace nilm::cli {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

Archetype archetype_from_string(const std::string& s) {
  if (s == "resistive") return Archetype::Resistive;
  if (s == "rectifier") return Archetype::Rectifier;
  if (s == "motor") return Archetype::Motor;
  if (s == "smps") return Archetype::Smps;
  throw ConfigError("unknown archetype: " + s);
}

const char* to_string(Archetype a) {
  switch (a) {
    case Archetype::Resistive: return "resistive";
    case Archetype::Rectifier: return "rectifier";
    case Archetype::Motor: return "motor";
    case Archetype::Smps: return "smps";
  }
  return "unknown";
}

void ToySignatureSpec::validate() const {
  if (label.empty()) throw ConfigError("toy spec: empty label");
  if (amplitude_rms <= 0.0) throw ConfigError("toy spec: amplitude must be positive");
  if (grid_hz <= 0.0 || rate <= 0.0) throw ConfigError("toy spec: bad rates");
  if (duration_min <= 0.0 || duration_max < duration_min)
    throw ConfigError("toy spec: bad duration range");
  if (voltage_peak <= 0.0) throw ConfigError("toy spec: voltage peak must be positive");
  for (const auto& h : harmonics)
    if (h.rel_amp >= 1.0)
      throw ConfigError("toy spec: harmonic magnitude must stay below the fundamental");
}

std::vector<HarmonicSpec> default_harmonics(Archetype a) {
  switch (a) {
    case Archetype::Resistive:
      return {};
    case Archetype::Rectifier:
      return {{3, 0.35, 0.4}, {5, 0.18, 1.1}, {7, 0.08, 2.0}};
    case Archetype::Motor:
      return {{3, 0.06, 0.2}, {5, 0.03, 1.5}};
    case Archetype::Smps:
      return {{3, 0.55, 0.0}, {5, 0.38, 0.7}, {7, 0.24, 1.4}, {9, 0.12, 2.1}};
  }
  return {};
}

signal::Signature generate_toy_signature(const ToySignatureSpec& spec, int index,
                                         std::uint64_t seed) {
  spec.validate();
  util::Rng rng(util::mix_seed(seed, util::fnv1a64(spec.label),
                               static_cast<std::uint64_t>(index)));

  const double duration = rng.uniform(spec.duration_min, spec.duration_max);
  const auto n = static_cast<std::size_t>(std::llround(duration * spec.rate));
  const double f0 = spec.grid_hz + rng.uniform(-0.3, 0.3);
  const double amp = spec.amplitude_rms * std::sqrt(2.0) * rng.uniform(0.88, 1.12);
  const double current_phase = rng.uniform(0.0, 2.0 * kPi);

  auto harmonics = spec.harmonics.empty() ? default_harmonics(spec.archetype) : spec.harmonics;
  for (auto& h : harmonics) h.rel_amp *= rng.uniform(0.9, 1.1);

  signal::Signature sig;
  sig.label = spec.label;
  char id[32];
  std::snprintf(id, sizeof(id), "_%04d", index);
  sig.source_id = spec.label + id;
  sig.current.rate = spec.rate;
  sig.voltage.rate = spec.rate;
  sig.current.samples.resize(n);
  sig.voltage.samples.resize(n);

  const double inrush = spec.archetype == Archetype::Resistive ? 1.0 : spec.inrush_scale;
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i) / spec.rate;
    const double envelope =
        1.0 + (inrush - 1.0) * std::exp(-t / std::max(spec.inrush_tau, 1e-3));
    double cur = std::sin(2.0 * kPi * f0 * t + current_phase);
    for (const auto& h : harmonics)
      cur += h.rel_amp * std::sin(2.0 * kPi * f0 * h.order * t + h.order * current_phase + h.phase);
    sig.current.samples[i] = amp * envelope * cur;

    double vol = std::sin(2.0 * kPi * f0 * t);
    if (spec.voltage_thd > 0.0)
      vol += spec.voltage_thd * std::sin(2.0 * kPi * 3.0 * f0 * t);
    sig.voltage.samples[i] = spec.voltage_peak * vol;
  }
  return sig;
}

std::vector<ToySignatureSpec> default_toy_specs() {
  std::vector<ToySignatureSpec> specs;
  const auto add = [&specs](const std::string& label, Archetype a, double amps, double grid,
                            double inrush, double tau) {
    ToySignatureSpec s;
    s.label = label;
    s.archetype = a;
    s.amplitude_rms = amps;
    s.grid_hz = grid;
    s.rate = grid == 50.0 ? 8000.0 : 9600.0;
    s.voltage_peak = grid == 50.0 ? 325.0 : 170.0;
    s.inrush_scale = inrush;
    s.inrush_tau = tau;
    s.duration_min = 1.5;
    s.duration_max = 2.5;
    specs.push_back(s);
  };
  add("kettle", Archetype::Resistive, 10.0, 50.0, 1.0, 0.1);
  add("heater", Archetype::Resistive, 5.5, 60.0, 1.0, 0.1);
  add("laptop", Archetype::Smps, 0.8, 50.0, 1.6, 0.08);
  add("monitor", Archetype::Smps, 0.45, 60.0, 1.3, 0.05);
  add("fridge", Archetype::Motor, 1.6, 50.0, 4.0, 0.25);
  add("vacuum", Archetype::Motor, 3.2, 60.0, 2.5, 0.12);
  add("charger", Archetype::Rectifier, 0.35, 50.0, 1.0, 0.1);
  add("microwave", Archetype::Rectifier, 6.5, 60.0, 1.8, 0.15);
  return specs;
}

}  // namespace nilm::cli
