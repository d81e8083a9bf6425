#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "nilm/cold/model.hpp"

namespace nilm::train {

struct TrainConfig {
  double lr = 3e-4;          // eta
  double weight_decay = 0.0; // lambda (decoupled)
  int batch = 64;            // B
  int epochs = 20;
  std::uint64_t seed = 1;
  int eval_every = 0;        // steps between validations; 0 = once per epoch

  void validate() const;
};

// In-memory feature dataset: one (t x v) matrix, multi-hot target and
// concurrency level per example.
struct FeatureDataset {
  std::vector<cold::Mat> x;
  std::vector<std::vector<std::uint8_t>> y;
  std::vector<int> w;

  std::size_t size() const { return x.size(); }
};

struct CurvePoint {
  std::int64_t step = 0;
  double loss = 0.0;
  double val_mf1 = 0.0;
  bool has_val = false;
};

struct TrainResult {
  cold::ColdParams best_params;
  double best_val_mf1 = 0.0;
  std::int64_t best_step = 0;
  std::vector<CurvePoint> curve;
};

// Seeded mini-batch SGD with Adam and decoupled decay; validation weighted
// mF1 (threshold 0.5) logged at eval_every steps and at every epoch end; the
// best-on-validation parameter set is retained.
TrainResult train(cold::ColdParams params, const FeatureDataset& train_set,
                  const FeatureDataset& val_set, const TrainConfig& cfg);

// Continues training an existing model/optimizer pair; used by the
// hyperparameter search to extend promoted trials.
struct TrainableModel {
  cold::ColdParams params;
  TrainConfig cfg;
  std::int64_t step = 0;
  int epochs_done = 0;

  // Runs until `target_epochs` total epochs; returns validation weighted mF1
  // at threshold 0.5 after the last epoch.
  double advance_to(int target_epochs, const FeatureDataset& train_set,
                    const FeatureDataset& val_set);

 private:
  struct Opt;
  std::shared_ptr<Opt> opt_;
};

// Inference probabilities, one row vector per example.
std::vector<std::vector<double>> predict_probabilities(const cold::ColdParams& params,
                                                       const FeatureDataset& data);

// Weighted mean F1 at a fixed threshold (mean of per-example F1).
double validation_mf1(const cold::ColdParams& params, const FeatureDataset& data,
                      double threshold);

}  // namespace nilm::train
