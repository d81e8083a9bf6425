#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nilm/signal/types.hpp"

namespace nilm::cli {

enum class Archetype { Resistive, Rectifier, Motor, Smps };

Archetype archetype_from_string(const std::string& s);
const char* to_string(Archetype a);

struct HarmonicSpec {
  int order = 3;
  double rel_amp = 0.0;  // relative to the fundamental
  double phase = 0.0;    // radians
};

struct ToySignatureSpec {
  std::string label;
  Archetype archetype = Archetype::Resistive;
  double amplitude_rms = 1.0;  // A
  std::vector<HarmonicSpec> harmonics;  // empty = archetype default
  double grid_hz = 50.0;
  double rate = 8000.0;
  double voltage_peak = 325.0;
  double voltage_thd = 0.0;   // relative 3rd-harmonic amplitude on the voltage
  double duration_min = 1.5;  // seconds
  double duration_max = 2.5;
  double inrush_scale = 1.0;  // startup current multiplier, decaying
  double inrush_tau = 0.15;   // seconds

  void validate() const;
};

// Archetype defaults when `harmonics` is empty.
std::vector<HarmonicSpec> default_harmonics(Archetype a);

// Deterministic parametric signature: fundamental-plus-harmonics current with
// per-instance jitter (amplitude, fundamental offset, phases, duration) and
// an ideal sinusoidal voltage with the configured THD.
signal::Signature generate_toy_signature(const ToySignatureSpec& spec, int index,
                                         std::uint64_t seed);

// Eight separable labels across the four archetypes, mixed 50/60 Hz grids.
std::vector<ToySignatureSpec> default_toy_specs();

}  // namespace nilm::cli
