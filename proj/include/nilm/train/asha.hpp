#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

namespace nilm::train {

struct AshaConfig {
  int max_resource = 16;     // epochs at the final rung
  int min_resource = 1;      // epochs at rung 0
  int reduction_factor = 4;  // eta_r
  int n_trials = 16;
  int n_workers = 4;         // emulated asynchronous worker slots

  void validate() const;
};

// Evaluates one configuration at a cumulative resource level. Called with
// strictly increasing resources per trial; implementations may keep state
// (model, optimizer) and continue from the previous call.
using TrialObjective = std::function<double(int trial_id, int resource)>;

struct TrialRecord {
  int trial_id = 0;
  int rung_reached = 0;   // highest rung with a recorded score
  int resource = 0;       // resource at that rung
  double score = 0.0;     // score at the highest rung
};

struct AshaResult {
  int best_trial = -1;
  double best_score = 0.0;
  std::vector<TrialRecord> table;
  std::vector<int> rung_resources;          // resource per rung
  std::vector<std::int64_t> completed_per_rung;
  std::vector<std::int64_t> promoted_per_rung;  // promotions out of each rung
};

// Asynchronous successive halving, emulated with a deterministic event
// queue: worker completions are processed in (time, sequence) order and all
// promotion decisions are serialized. A trial is promoted out of rung i when
// it ranks inside the top floor(completed_i / eta_r) of recorded scores,
// which never exceeds the ceil(n/eta_r) quota.
AshaResult asha_search(const AshaConfig& cfg, const TrialObjective& objective);

}  // namespace nilm::train
