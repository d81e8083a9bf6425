#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "nilm/util/rng.hpp"

namespace nilm::cold {

using Mat = Eigen::MatrixXd;
using Vec = Eigen::VectorXd;

struct ColdHyperParams {
  int q = 256;       // width
  int k = 14;        // residual block count
  int n_head = 8;    // attention heads
  double p_d = 0.2;  // dropout probability
  int n_labels = 0;  // |L|
  int v_in = 0;      // input feature dimension (frequency bins)

  void validate() const;  // throws ConfigError
  int d_head() const { return q / n_head; }
};

struct RpsnParams {
  Mat wa;        // q x q
  Vec theta_a;   // q
  Mat wb;        // q x q
  Vec theta_b;   // q
  Vec ln_gain;   // q
  Vec ln_bias;   // q
};

struct ColdParams {
  ColdHyperParams hp;
  Mat w1;        // q x v_in
  Vec theta1;    // q
  std::vector<RpsnParams> blocks;
  std::vector<Mat> wq, wk, wv;  // n_head matrices, each d_head x q
  Mat wo;                       // q x q
  Mat w_pred;                   // n_labels x q
  Vec theta_pred;               // n_labels
  Vec alpha_raw;                // n_labels; alpha = -softplus(alpha_raw) < 0
};

// Glorot-uniform weights, zero biases, unit layer-norm gain, alpha_raw set so
// that alpha starts at exactly -1 (the standard sigmoid).
ColdParams init_params(const ColdHyperParams& hp, std::uint64_t seed);

// Zero-valued parameter set with the same shapes (gradient/optimizer buffers).
ColdParams zeros_like(const ColdParams& params);

// Flat views over every tensor in declaration order. The order defines the
// checkpoint layout and the optimizer state mapping.
std::vector<Eigen::Map<Vec>> tensor_views(ColdParams& params);
std::vector<Eigen::Map<const Vec>> tensor_views(const ColdParams& params);

std::int64_t parameter_count(const ColdParams& params);

Vec alpha_of(const Vec& alpha_raw);  // -softplus, elementwise

// --- Individual stages (all row-position-wise over t) ---

// x * w^T - theta (bias subtracted, per the layer definition).
Mat position_wise(const Mat& x, const Mat& w, const Vec& theta);

// Inverted dropout: zero entries with probability p_d and scale survivors by
// 1/(1-p_d); identity in inference mode.
Mat dropout(const Mat& x, double p_d, util::Rng& rng, bool training);

// Per-row standardization (population variance, eps 1e-5) then gain/bias.
Mat layer_norm(const Mat& x, const Vec& gain, const Vec& bias);

// ReLU(LayerNorm(x + Dropout(h_b(ReLU(Dropout(h_a(x))))))).
Mat rpsn(const Mat& x, const RpsnParams& block, double p_d, util::Rng& rng, bool training);

// Multi-head self-attention with Q=K=V=x and row-softmax scores scaled by
// 1/sqrt(q/n_head).
Mat mhsa(const Mat& x, const std::vector<Mat>& wq, const std::vector<Mat>& wk,
         const std::vector<Mat>& wv, const Mat& wo);

Vec global_pool(const Mat& x);  // column means

// Sigmoid(x * w^T - theta) with the label-wise sigmoid 1/(1 - alpha*exp(-z)).
Vec predict_head(const Vec& x, const Mat& w_pred, const Vec& theta_pred, const Vec& alpha);

// --- Full forward/backward ---

struct BlockCache {
  Mat input;
  Mat a_pre;    // h_a output
  Mat a_mask;   // dropout factors (0 or 1/(1-p))
  Mat a_drop;   // post-dropout, pre-ReLU
  Mat z;        // ReLU(a_drop)
  Mat b_mask;
  Mat residual; // input + dropped h_b output
  Vec inv_std;  // per row
  Mat xhat;     // standardized residual
  Mat n_pre;    // affine layer-norm output, pre-ReLU
};

struct HeadCache {
  Mat q, k, v;  // t x d_head
  Mat attn;     // t x t, rows sum to 1
};

struct ForwardCache {
  Mat x0;
  Mat h1_pre;
  Mat x1;
  std::vector<BlockCache> blocks;
  std::vector<HeadCache> heads;
  Mat concat;    // t x q
  Mat attn_out;  // t x q
  Vec pooled;    // q
  Vec z;         // n_labels, pre-sigmoid
  Vec alpha;     // n_labels
  Vec yhat;      // n_labels
};

// Probabilities over labels. `rng` is only consulted when training (dropout);
// pass cache to enable a subsequent backward pass.
Vec cold_forward(const Mat& x0, const ColdParams& params, util::Rng* rng, bool training,
                 ForwardCache* cache = nullptr);

// Binary cross-entropy in bits, averaged over labels; probabilities are
// clamped to [1e-7, 1 - 1e-7].
double bce_loss(const std::vector<std::uint8_t>& y, const Vec& yhat);
Vec bce_loss_grad(const std::vector<std::uint8_t>& y, const Vec& yhat);

// Accumulates gradients of the cached forward pass into `grads` (dropout
// masks replayed from the cache).
void cold_backward(const ColdParams& params, const ForwardCache& cache, const Vec& dyhat,
                   ColdParams& grads);

}  // namespace nilm::cold
