#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "nilm/cli/config.hpp"
#include "nilm/sns/types.hpp"
#include "nilm/train/asha.hpp"
#include "nilm/train/metrics.hpp"

namespace nilm::cli {

// Command bodies shared by the CLI binary and the acceptance suite. Each
// writes its artifacts under the configured paths and returns a summary.

// Deterministic parametric corpus in the canonical signature format.
int cmd_gen_toy(const PipelineConfig& cfg);

struct NormalizeSummary {
  int accepted = 0;
  std::map<std::string, int> rejected_by_code;
  std::map<std::string, double> per_label_rms;  // mean RMS current per label
};

NormalizeSummary cmd_normalize(const PipelineConfig& cfg);

sns::SynthesisManifest cmd_synthesize(const PipelineConfig& cfg, const std::string& split);

struct FeaturizeSummary {
  int t = 0;
  int v = 0;
  std::int64_t count = 0;
  bool stats_written = false;
};

FeaturizeSummary cmd_featurize(const PipelineConfig& cfg, const std::string& split);

struct TrainSummary {
  double best_val_mf1 = 0.0;
  std::int64_t best_step = 0;
  std::int64_t steps = 0;
};

TrainSummary cmd_train(const PipelineConfig& cfg);

train::AshaResult cmd_search(const PipelineConfig& cfg);

// Tunes the decision threshold on `split` (grid step 1e-4).
train::ThresholdResult cmd_tune_threshold(const PipelineConfig& cfg, const std::string& split);

// Evaluates the trained checkpoint on `split`. If `threshold` is empty the
// threshold is tuned on tune_split first.
train::EvalReport cmd_evaluate(const PipelineConfig& cfg, const std::string& split,
                               std::optional<double> threshold = std::nullopt,
                               const std::string& tune_split = "val");

}  // namespace nilm::cli
