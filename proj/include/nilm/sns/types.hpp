#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include "nilm/signal/types.hpp"

namespace nilm::sns {

// Baseline patterns, keyed by label. Signatures are shared so splits and
// synthesis never copy waveform data.
using PatternMap = std::map<std::string, std::vector<std::shared_ptr<const signal::Signature>>>;

// An ordered (sorted) set of labels: the combination L_w.
using LabelSet = std::vector<std::string>;

enum class AllocationMode {
  Budget,        // reprs per combination = b_repr_hat / n_combinations (the tables)
  LiteralOmega,  // ceil(min(Omega * prod|P_l|, b_repr_hat)) as printed
};

struct ScheduleEntry {
  int w = 0;
  std::int64_t b_comb_hat = 0;
  std::int64_t b_repr_hat = 0;  // <= 0 means unbounded (the "-" rows for w=1)
};

struct SynthesisSchedule {
  std::vector<ScheduleEntry> entries;
  std::map<std::string, double> label_distribution;  // empty for uniform Pr(L)
  double t_obs = 5.0;  // seconds
  std::uint64_t seed = 0;
  AllocationMode mode = AllocationMode::Budget;

  void validate() const;  // throws ConfigError
};

struct Placement {
  std::string label;
  std::string source_id;
  std::int64_t start_offset = 0;  // samples; negative = started before the window
  std::int64_t phase_shift = 0;   // circular shift in samples
};

struct AggregateExample {
  std::uint64_t id = 0;
  int w = 0;
  signal::Waveform current;            // length t_obs * f_down
  std::vector<std::uint8_t> labels;    // multi-hot over the universe
  std::vector<Placement> placements;
};

struct BaselineSplit {
  PatternMap train;
  PatternMap val;
  PatternMap test;
};

struct TruncationEvent {
  int w = 0;
  std::int64_t combo_index = 0;
  std::int64_t requested = 0;
  std::int64_t available = 0;
};

struct SynthesisManifest {
  std::vector<std::string> universe;       // sorted label names
  std::map<int, std::int64_t> counts;      // examples per w
  std::map<int, std::int64_t> combos;      // sampled combinations per w
  std::vector<TruncationEvent> truncations;
  std::uint64_t seed = 0;
  double t_obs = 0.0;
  double f_down = 0.0;
};

}  // namespace nilm::sns
