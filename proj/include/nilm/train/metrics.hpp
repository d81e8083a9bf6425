#pragma once

#include <cstdint>
#include <map>
#include <vector>

namespace nilm::train {

// Example-based F1 over one label vector. Standard factor-2 harmonic mean by
// default; `literal` selects PR*RE/(PR+RE) as printed in the metric's source
// definition. Both-all-zero vectors score 1, zero PR+RE otherwise scores 0.
double f1_example(const std::vector<std::uint8_t>& y, const std::vector<std::uint8_t>& y_pred,
                  bool literal = false);

// Arithmetic mean of per-example F1 scores. Throws EmptySubsetError.
double mean_f1(const std::vector<double>& per_example_f1);

struct SubsetScore {
  std::int64_t count = 0;
  double mean_f1 = 0.0;
};

// sum_w (|S_w|/|S|) * meanF1_w.
double weighted_mf1(const std::map<int, SubsetScore>& per_w);

struct ThresholdResult {
  double threshold = 0.5;
  double weighted_mf1 = 0.0;
};

// Grid search over thresholds j*step in (0,1) for the maximal weighted mean
// F1 (prediction rule: probability > threshold). Ties resolve toward the
// smaller threshold.
ThresholdResult tune_threshold(const std::vector<std::vector<double>>& probabilities,
                               const std::vector<std::vector<std::uint8_t>>& targets,
                               const std::vector<int>& w_of_example, double step = 1e-4,
                               bool literal = false);

// Per-w and per-label evaluation at a fixed threshold.
struct EvalReport {
  std::map<int, SubsetScore> per_w;
  double weighted_mf1 = 0.0;
  double threshold = 0.5;
  std::vector<double> per_label_f1;       // index-aligned with the label universe
  std::map<int, std::int64_t> counts;     // |S_w|
};

EvalReport evaluate_predictions(const std::vector<std::vector<double>>& probabilities,
                                const std::vector<std::vector<std::uint8_t>>& targets,
                                const std::vector<int>& w_of_example, double threshold,
                                bool literal = false);

}  // namespace nilm::train
