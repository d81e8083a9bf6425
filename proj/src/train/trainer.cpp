#include "nilm/train/trainer.hpp"

#include <memory>
#include <numeric>

#include "nilm/errors.hpp"
#include "nilm/train/adam.hpp"
#include "nilm/train/metrics.hpp"
#include "nilm/util/rng.hpp"

namespace nilm::train {

void TrainConfig::validate() const {
  if (lr <= 0.0) throw ConfigError("train: learning rate must be positive");
  if (weight_decay < 0.0) throw ConfigError("train: weight decay must be >= 0");
  if (batch < 1) throw ConfigError("train: batch size must be >= 1");
  if (epochs < 0) throw ConfigError("train: epochs must be >= 0");
  if (eval_every < 0) throw ConfigError("train: eval_every must be >= 0");
}

namespace {

// Distinct RNG stream tags; dropout streams use (epoch + 1) so the two kinds
// can never collide.
constexpr std::uint64_t kShuffleStream = 0;

void check_dataset(const FeatureDataset& data, const char* name) {
  if (data.x.empty()) throw DataError(std::string("train: empty dataset: ") + name);
  if (data.y.size() != data.x.size() || data.w.size() != data.x.size())
    throw DataError(std::string("train: ragged dataset: ") + name);
}

// One mini-batch: mean loss and accumulated mean gradients.
double batch_pass(cold::ColdParams& params, const FeatureDataset& data,
                  const std::vector<std::size_t>& order, std::size_t lo, std::size_t hi,
                  util::Rng& rng, cold::ColdParams& grads) {
  auto grad_views = cold::tensor_views(grads);
  for (auto& g : grad_views) g.setZero();

  double loss = 0.0;
  const double inv_b = 1.0 / static_cast<double>(hi - lo);
  cold::ForwardCache cache;
  for (std::size_t i = lo; i < hi; ++i) {
    const std::size_t e = order[i];
    const cold::Vec yhat = cold::cold_forward(data.x[e], params, &rng, true, &cache);
    loss += cold::bce_loss(data.y[e], yhat);
    const cold::Vec dyhat = cold::bce_loss_grad(data.y[e], yhat) * inv_b;
    cold::cold_backward(params, cache, dyhat, grads);
  }
  return loss * inv_b;
}

}  // namespace

std::vector<std::vector<double>> predict_probabilities(const cold::ColdParams& params,
                                                       const FeatureDataset& data) {
  std::vector<std::vector<double>> probs(data.size());
  for (std::size_t e = 0; e < data.size(); ++e) {
    const cold::Vec yhat = cold::cold_forward(data.x[e], params, nullptr, false);
    probs[e].assign(yhat.data(), yhat.data() + yhat.size());
  }
  return probs;
}

double validation_mf1(const cold::ColdParams& params, const FeatureDataset& data,
                      double threshold) {
  double total = 0.0;
  std::vector<std::uint8_t> pred;
  for (std::size_t e = 0; e < data.size(); ++e) {
    const cold::Vec yhat = cold::cold_forward(data.x[e], params, nullptr, false);
    pred.resize(static_cast<std::size_t>(yhat.size()));
    for (Eigen::Index l = 0; l < yhat.size(); ++l) pred[static_cast<std::size_t>(l)] = yhat[l] > threshold ? 1 : 0;
    total += f1_example(data.y[e], pred);
  }
  return total / static_cast<double>(data.size());
}

struct TrainLoop {
  cold::ColdParams params;
  AdamState adam;
  TrainConfig cfg;
  std::int64_t step = 0;

  TrainResult result;

  explicit TrainLoop(cold::ColdParams p, const TrainConfig& c)
      : params(std::move(p)), adam(AdamState::init(params)), cfg(c) {
    result.best_params = params;
    result.best_val_mf1 = -1.0;
  }

  void validate_and_track(const FeatureDataset& val_set, double last_loss) {
    const double mf1 = validation_mf1(params, val_set, 0.5);
    result.curve.push_back(CurvePoint{step, last_loss, mf1, true});
    if (mf1 > result.best_val_mf1) {
      result.best_val_mf1 = mf1;
      result.best_step = step;
      result.best_params = params;
    }
  }

  void run_epochs(const FeatureDataset& train_set, const FeatureDataset& val_set,
                  int first_epoch, int last_epoch) {
    cold::ColdParams grads = cold::zeros_like(params);
    std::vector<std::size_t> order(train_set.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = first_epoch; epoch < last_epoch; ++epoch) {
      util::Rng shuffle_rng(
          util::mix_seed(cfg.seed, kShuffleStream, static_cast<std::uint64_t>(epoch)));
      shuffle_rng.shuffle(order);
      const std::size_t n = order.size();
      std::size_t batch_index = 0;
      for (std::size_t lo = 0; lo < n; lo += static_cast<std::size_t>(cfg.batch), ++batch_index) {
        const std::size_t hi = std::min(n, lo + static_cast<std::size_t>(cfg.batch));
        util::Rng dropout_rng(util::mix_seed(cfg.seed, static_cast<std::uint64_t>(epoch) + 1,
                                             batch_index));
        const double loss = batch_pass(params, train_set, order, lo, hi, dropout_rng, grads);
        adam_step(params, grads, adam, cfg.lr, cfg.weight_decay);
        ++step;
        if (cfg.eval_every > 0 && step % cfg.eval_every == 0) {
          validate_and_track(val_set, loss);
        } else {
          result.curve.push_back(CurvePoint{step, loss, 0.0, false});
        }
      }
      if (cfg.eval_every == 0) {
        const double last_loss = result.curve.empty() ? 0.0 : result.curve.back().loss;
        validate_and_track(val_set, last_loss);
      }
    }
  }
};

TrainResult train(cold::ColdParams params, const FeatureDataset& train_set,
                  const FeatureDataset& val_set, const TrainConfig& cfg) {
  cfg.validate();
  check_dataset(train_set, "train");
  check_dataset(val_set, "val");

  TrainLoop loop(std::move(params), cfg);
  loop.run_epochs(train_set, val_set, 0, cfg.epochs);
  if (loop.result.best_val_mf1 < 0.0) {
    // No validation point was taken (epochs == 0): fall back to the inputs.
    loop.result.best_params = loop.params;
    loop.result.best_val_mf1 = validation_mf1(loop.params, val_set, 0.5);
    loop.result.best_step = loop.step;
  }
  return loop.result;
}

struct TrainableModel::Opt {
  AdamState adam;
};

double TrainableModel::advance_to(int target_epochs, const FeatureDataset& train_set,
                                  const FeatureDataset& val_set) {
  cfg.validate();
  check_dataset(train_set, "train");
  check_dataset(val_set, "val");
  if (!opt_) opt_ = std::make_shared<Opt>(Opt{AdamState::init(params)});

  TrainLoop loop(std::move(params), cfg);
  loop.adam = std::move(opt_->adam);
  loop.step = step;
  loop.run_epochs(train_set, val_set, epochs_done, target_epochs);

  params = std::move(loop.params);
  opt_->adam = std::move(loop.adam);
  step = loop.step;
  epochs_done = std::max(epochs_done, target_epochs);
  return validation_mf1(params, val_set, 0.5);
}

}  // namespace nilm::train
