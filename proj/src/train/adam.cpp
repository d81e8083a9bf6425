#include "nilm/train/adam.hpp"

#include <cmath>

#include "nilm/errors.hpp"

namespace nilm::train {

void adam_step(cold::ColdParams& params, const cold::ColdParams& grads, AdamState& state,
               double lr, double weight_decay, const AdamConfig& cfg) {
  auto p_views = cold::tensor_views(params);
  auto g_views = cold::tensor_views(grads);
  auto m_views = cold::tensor_views(state.m);
  auto v_views = cold::tensor_views(state.v);
  if (p_views.size() != g_views.size() || p_views.size() != m_views.size())
    throw ShapeMismatchError("adam_step: parameter/state tensor count mismatch");

  state.t += 1;
  const double bc1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.t));
  const double bc2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.t));

  for (std::size_t i = 0; i < p_views.size(); ++i) {
    auto& p = p_views[i];
    const auto& g = g_views[i];
    auto& m = m_views[i];
    auto& v = v_views[i];
    if (p.size() != g.size())
      throw ShapeMismatchError("adam_step: gradient shape mismatch");
    m = cfg.beta1 * m + (1.0 - cfg.beta1) * g;
    v = cfg.beta2 * v.array().matrix() + (1.0 - cfg.beta2) * g.array().square().matrix();
    const auto m_hat = (m / bc1).array();
    const auto v_hat = (v / bc2).array();
    p = (p.array() - lr * (m_hat / (v_hat.sqrt() + cfg.eps) + weight_decay * p.array()))
            .matrix();
  }
}

}  // namespace nilm::train
