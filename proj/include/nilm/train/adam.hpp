#pragma once

#include <cstdint>
#include <vector>

#include "nilm/cold/model.hpp"

namespace nilm::train {

// Adam with decoupled weight decay:
//   p <- p - eta * (m_hat / (sqrt(v_hat) + eps) + lambda * p)
struct AdamState {
  cold::ColdParams m;
  cold::ColdParams v;
  std::int64_t t = 0;

  static AdamState init(const cold::ColdParams& params) {
    return AdamState{cold::zeros_like(params), cold::zeros_like(params), 0};
  }
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

void adam_step(cold::ColdParams& params, const cold::ColdParams& grads, AdamState& state,
               double lr, double weight_decay, const AdamConfig& cfg = {});

}  // namespace nilm::train
