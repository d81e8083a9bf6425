#include "nilm/cold/model.hpp"

#include <algorithm>
#include <cmath>

#include "nilm/errors.hpp"

namespace nilm::cold {

namespace {

constexpr double kLnEps = 1e-5;
constexpr double kClampLo = 1e-7;
constexpr double kClampHi = 1.0 - 1e-7;
const double kLn2 = std::log(2.0);

double softplus(double x) {
  if (x > 30.0) return x;
  if (x < -30.0) return std::exp(x);
  return std::log1p(std::exp(x));
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Mat glorot(int rows, int cols, util::Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(rows + cols));
  Mat m(rows, cols);
  // Row-major fill order so the layout is pinned independent of Eigen's
  // storage order.
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) m(r, c) = rng.uniform(-limit, limit);
  return m;
}

Mat softmax_rows(const Mat& scores) {
  Mat out(scores.rows(), scores.cols());
  for (Eigen::Index r = 0; r < scores.rows(); ++r) {
    const double mx = scores.row(r).maxCoeff();
    Eigen::ArrayXd e = (scores.row(r).array() - mx).exp();
    out.row(r) = (e / e.sum()).matrix();
  }
  return out;
}

// dS = A .* (dA - rowsum(dA .* A))
Mat softmax_rows_backward(const Mat& attn, const Mat& dattn) {
  Mat ds(attn.rows(), attn.cols());
  for (Eigen::Index r = 0; r < attn.rows(); ++r) {
    const double dot = attn.row(r).dot(dattn.row(r));
    ds.row(r) = (attn.row(r).array() * (dattn.row(r).array() - dot)).matrix();
  }
  return ds;
}

}  // namespace

void ColdHyperParams::validate() const {
  if (q < 1) throw ConfigError("cold: q must be >= 1");
  if (k < 0) throw ConfigError("cold: k must be >= 0");
  if (n_head < 1) throw ConfigError("cold: n_head must be >= 1");
  if (q % n_head != 0) throw ConfigError("cold: q must be divisible by n_head");
  if (p_d < 0.0 || p_d >= 1.0) throw ConfigError("cold: p_d must be in [0, 1)");
  if (n_labels < 1) throw ConfigError("cold: n_labels must be >= 1");
  if (v_in < 1) throw ConfigError("cold: v_in must be >= 1");
}

ColdParams init_params(const ColdHyperParams& hp, std::uint64_t seed) {
  hp.validate();
  util::Rng rng(seed);
  ColdParams p;
  p.hp = hp;
  p.w1 = glorot(hp.q, hp.v_in, rng);
  p.theta1 = Vec::Zero(hp.q);
  p.blocks.resize(static_cast<std::size_t>(hp.k));
  for (auto& b : p.blocks) {
    b.wa = glorot(hp.q, hp.q, rng);
    b.theta_a = Vec::Zero(hp.q);
    b.wb = glorot(hp.q, hp.q, rng);
    b.theta_b = Vec::Zero(hp.q);
    b.ln_gain = Vec::Ones(hp.q);
    b.ln_bias = Vec::Zero(hp.q);
  }
  const int dh = hp.d_head();
  for (int h = 0; h < hp.n_head; ++h) {
    p.wq.push_back(glorot(dh, hp.q, rng));
    p.wk.push_back(glorot(dh, hp.q, rng));
    p.wv.push_back(glorot(dh, hp.q, rng));
  }
  p.wo = glorot(hp.q, hp.q, rng);
  p.w_pred = glorot(hp.n_labels, hp.q, rng);
  p.theta_pred = Vec::Zero(hp.n_labels);
  // softplus(ln(e - 1)) == 1, so alpha starts at exactly -1.
  p.alpha_raw = Vec::Constant(hp.n_labels, std::log(std::exp(1.0) - 1.0));
  return p;
}

ColdParams zeros_like(const ColdParams& params) {
  ColdParams z;
  z.hp = params.hp;
  z.w1 = Mat::Zero(params.w1.rows(), params.w1.cols());
  z.theta1 = Vec::Zero(params.theta1.size());
  for (const auto& b : params.blocks) {
    RpsnParams zb;
    zb.wa = Mat::Zero(b.wa.rows(), b.wa.cols());
    zb.theta_a = Vec::Zero(b.theta_a.size());
    zb.wb = Mat::Zero(b.wb.rows(), b.wb.cols());
    zb.theta_b = Vec::Zero(b.theta_b.size());
    zb.ln_gain = Vec::Zero(b.ln_gain.size());
    zb.ln_bias = Vec::Zero(b.ln_bias.size());
    z.blocks.push_back(std::move(zb));
  }
  for (const auto& m : params.wq) z.wq.push_back(Mat::Zero(m.rows(), m.cols()));
  for (const auto& m : params.wk) z.wk.push_back(Mat::Zero(m.rows(), m.cols()));
  for (const auto& m : params.wv) z.wv.push_back(Mat::Zero(m.rows(), m.cols()));
  z.wo = Mat::Zero(params.wo.rows(), params.wo.cols());
  z.w_pred = Mat::Zero(params.w_pred.rows(), params.w_pred.cols());
  z.theta_pred = Vec::Zero(params.theta_pred.size());
  z.alpha_raw = Vec::Zero(params.alpha_raw.size());
  return z;
}

namespace {

template <typename Params, typename MapType>
std::vector<MapType> views_impl(Params& p) {
  std::vector<MapType> out;
  const auto add = [&out](auto& m) { out.emplace_back(m.data(), m.size()); };
  add(p.w1);
  add(p.theta1);
  for (auto& b : p.blocks) {
    add(b.wa);
    add(b.theta_a);
    add(b.wb);
    add(b.theta_b);
    add(b.ln_gain);
    add(b.ln_bias);
  }
  for (auto& m : p.wq) add(m);
  for (auto& m : p.wk) add(m);
  for (auto& m : p.wv) add(m);
  add(p.wo);
  add(p.w_pred);
  add(p.theta_pred);
  add(p.alpha_raw);
  return out;
}

}  // namespace

std::vector<Eigen::Map<Vec>> tensor_views(ColdParams& params) {
  return views_impl<ColdParams, Eigen::Map<Vec>>(params);
}

std::vector<Eigen::Map<const Vec>> tensor_views(const ColdParams& params) {
  return views_impl<const ColdParams, Eigen::Map<const Vec>>(params);
}

std::int64_t parameter_count(const ColdParams& params) {
  std::int64_t n = 0;
  for (const auto& view : tensor_views(params)) n += view.size();
  return n;
}

Vec alpha_of(const Vec& alpha_raw) {
  Vec a(alpha_raw.size());
  for (Eigen::Index i = 0; i < a.size(); ++i) a[i] = -softplus(alpha_raw[i]);
  return a;
}

Mat position_wise(const Mat& x, const Mat& w, const Vec& theta) {
  if (x.cols() != w.cols())
    throw ShapeMismatchError("position_wise: input width does not match weight columns");
  if (w.rows() != theta.size())
    throw ShapeMismatchError("position_wise: bias length does not match weight rows");
  return (x * w.transpose()).rowwise() - theta.transpose();
}

Mat dropout(const Mat& x, double p_d, util::Rng& rng, bool training) {
  if (p_d < 0.0 || p_d >= 1.0) throw std::invalid_argument("dropout: p_d must be in [0, 1)");
  if (!training || p_d == 0.0) return x;
  const double keep_scale = 1.0 / (1.0 - p_d);
  Mat out(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r)
    for (Eigen::Index c = 0; c < x.cols(); ++c)
      out(r, c) = rng.uniform() < p_d ? 0.0 : x(r, c) * keep_scale;
  return out;
}

Mat layer_norm(const Mat& x, const Vec& gain, const Vec& bias) {
  if (x.cols() != gain.size() || x.cols() != bias.size())
    throw ShapeMismatchError("layer_norm: gain/bias length mismatch");
  Mat out(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const double mu = x.row(r).mean();
    const double var = (x.row(r).array() - mu).square().mean();
    const double inv = 1.0 / std::sqrt(var + kLnEps);
    out.row(r) =
        (((x.row(r).array() - mu) * inv) * gain.transpose().array() + bias.transpose().array())
            .matrix();
  }
  return out;
}

Mat rpsn(const Mat& x, const RpsnParams& block, double p_d, util::Rng& rng, bool training) {
  const Mat a = dropout(position_wise(x, block.wa, block.theta_a), p_d, rng, training);
  const Mat z = a.cwiseMax(0.0);
  const Mat b = dropout(position_wise(z, block.wb, block.theta_b), p_d, rng, training);
  return layer_norm(x + b, block.ln_gain, block.ln_bias).cwiseMax(0.0);
}

Mat mhsa(const Mat& x, const std::vector<Mat>& wq, const std::vector<Mat>& wk,
         const std::vector<Mat>& wv, const Mat& wo) {
  if (wq.empty() || wq.size() != wk.size() || wq.size() != wv.size())
    throw ShapeMismatchError("mhsa: inconsistent head parameter counts");
  const auto n_head = static_cast<int>(wq.size());
  const auto dh = static_cast<int>(wq.front().rows());
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  Mat concat(x.rows(), static_cast<Eigen::Index>(n_head) * dh);
  for (int h = 0; h < n_head; ++h) {
    const Mat q = x * wq[static_cast<std::size_t>(h)].transpose();
    const Mat k = x * wk[static_cast<std::size_t>(h)].transpose();
    const Mat v = x * wv[static_cast<std::size_t>(h)].transpose();
    const Mat attn = softmax_rows(q * k.transpose() * scale);
    concat.middleCols(static_cast<Eigen::Index>(h) * dh, dh) = attn * v;
  }
  return concat * wo.transpose();
}

Vec global_pool(const Mat& x) {
  if (x.rows() < 1) throw std::invalid_argument("global_pool: empty input");
  return x.colwise().mean().transpose();
}

Vec predict_head(const Vec& x, const Mat& w_pred, const Vec& theta_pred, const Vec& alpha) {
  if (x.size() != w_pred.cols())
    throw ShapeMismatchError("predict_head: feature length mismatch");
  const Vec z = w_pred * x - theta_pred;
  Vec yhat(z.size());
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double a = alpha[i];
    // 1 / (1 - a*exp(-z)), computed without overflowing exp.
    if (z[i] >= 0.0) {
      yhat[i] = 1.0 / (1.0 - a * std::exp(-z[i]));
    } else {
      const double e = std::exp(z[i]);
      yhat[i] = e / (e - a);
    }
  }
  return yhat;
}

Vec cold_forward(const Mat& x0, const ColdParams& params, util::Rng* rng, bool training,
                 ForwardCache* cache) {
  const auto& hp = params.hp;
  if (x0.cols() != hp.v_in) throw ShapeMismatchError("cold_forward: input width != v_in");
  if (training && hp.p_d > 0.0 && rng == nullptr)
    throw std::invalid_argument("cold_forward: training with dropout requires an rng");

  util::Rng dummy(0);
  util::Rng& r = rng ? *rng : dummy;
  const bool drop = training && hp.p_d > 0.0;
  const double keep_scale = drop ? 1.0 / (1.0 - hp.p_d) : 1.0;

  const auto make_mask = [&](Eigen::Index rows, Eigen::Index cols) {
    Mat mask = Mat::Constant(rows, cols, 1.0);
    if (drop)
      for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j)
          mask(i, j) = r.uniform() < hp.p_d ? 0.0 : keep_scale;
    return mask;
  };

  if (cache) *cache = ForwardCache{};
  if (cache) cache->x0 = x0;

  // First projection, activated before the first residual block.
  const Mat h1 = position_wise(x0, params.w1, params.theta1);
  Mat x = h1.cwiseMax(0.0);
  if (cache) {
    cache->h1_pre = h1;
    cache->x1 = x;
  }

  for (const auto& block : params.blocks) {
    BlockCache bc;
    bc.input = x;
    bc.a_pre = position_wise(x, block.wa, block.theta_a);
    bc.a_mask = make_mask(bc.a_pre.rows(), bc.a_pre.cols());
    bc.a_drop = bc.a_pre.cwiseProduct(bc.a_mask);
    bc.z = bc.a_drop.cwiseMax(0.0);
    const Mat b_pre = position_wise(bc.z, block.wb, block.theta_b);
    bc.b_mask = make_mask(b_pre.rows(), b_pre.cols());
    bc.residual = x + b_pre.cwiseProduct(bc.b_mask);

    bc.inv_std.resize(bc.residual.rows());
    bc.xhat.resize(bc.residual.rows(), bc.residual.cols());
    for (Eigen::Index row = 0; row < bc.residual.rows(); ++row) {
      const double mu = bc.residual.row(row).mean();
      const double var = (bc.residual.row(row).array() - mu).square().mean();
      const double inv = 1.0 / std::sqrt(var + kLnEps);
      bc.inv_std[row] = inv;
      bc.xhat.row(row) = ((bc.residual.row(row).array() - mu) * inv).matrix();
    }
    bc.n_pre = (bc.xhat.array().rowwise() * block.ln_gain.transpose().array()).matrix();
    bc.n_pre.rowwise() += block.ln_bias.transpose();
    x = bc.n_pre.cwiseMax(0.0);
    if (cache) cache->blocks.push_back(std::move(bc));
  }

  // Multi-head self-attention (Q = K = V = x).
  const int dh = hp.d_head();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  Mat concat(x.rows(), hp.q);
  std::vector<HeadCache> heads;
  for (int h = 0; h < hp.n_head; ++h) {
    HeadCache hc;
    hc.q = x * params.wq[static_cast<std::size_t>(h)].transpose();
    hc.k = x * params.wk[static_cast<std::size_t>(h)].transpose();
    hc.v = x * params.wv[static_cast<std::size_t>(h)].transpose();
    hc.attn = softmax_rows(hc.q * hc.k.transpose() * scale);
    concat.middleCols(static_cast<Eigen::Index>(h) * dh, dh) = hc.attn * hc.v;
    if (cache) heads.push_back(std::move(hc));
  }
  const Mat attn_out = concat * params.wo.transpose();

  const Vec pooled = global_pool(attn_out);
  const Vec alpha = alpha_of(params.alpha_raw);
  const Vec z = params.w_pred * pooled - params.theta_pred;
  const Vec yhat = predict_head(pooled, params.w_pred, params.theta_pred, alpha);

  if (cache) {
    cache->heads = std::move(heads);
    cache->concat = concat;
    cache->attn_out = attn_out;
    cache->pooled = pooled;
    cache->z = z;
    cache->alpha = alpha;
    cache->yhat = yhat;
  }
  return yhat;
}

double bce_loss(const std::vector<std::uint8_t>& y, const Vec& yhat) {
  if (static_cast<Eigen::Index>(y.size()) != yhat.size())
    throw ShapeMismatchError("bce_loss: label/prediction length mismatch");
  double total = 0.0;
  for (Eigen::Index i = 0; i < yhat.size(); ++i) {
    const double p = std::clamp(yhat[i], kClampLo, kClampHi);
    total += y[static_cast<std::size_t>(i)] ? std::log2(p) : std::log2(1.0 - p);
  }
  return -total / static_cast<double>(yhat.size());
}

Vec bce_loss_grad(const std::vector<std::uint8_t>& y, const Vec& yhat) {
  if (static_cast<Eigen::Index>(y.size()) != yhat.size())
    throw ShapeMismatchError("bce_loss_grad: label/prediction length mismatch");
  const double norm = 1.0 / (static_cast<double>(yhat.size()) * kLn2);
  Vec g = Vec::Zero(yhat.size());
  for (Eigen::Index i = 0; i < yhat.size(); ++i) {
    // No gradient through the clamp.
    if (yhat[i] < kClampLo || yhat[i] > kClampHi) continue;
    const double p = yhat[i];
    g[i] = y[static_cast<std::size_t>(i)] ? -norm / p : norm / (1.0 - p);
  }
  return g;
}

void cold_backward(const ColdParams& params, const ForwardCache& cache, const Vec& dyhat,
                   ColdParams& grads) {
  const auto& hp = params.hp;

  // Head. dyhat -> dz, dalpha_raw, dw_pred, dtheta_pred, dpooled.
  // With yhat = 1/(1 - alpha*exp(-z)): dyhat/dz = yhat*(1 - yhat) and
  // dyhat/dalpha = yhat*(yhat - 1)/alpha, for any alpha < 0.
  Vec dz(dyhat.size());
  for (Eigen::Index i = 0; i < dyhat.size(); ++i)
    dz[i] = dyhat[i] * cache.yhat[i] * (1.0 - cache.yhat[i]);
  for (Eigen::Index i = 0; i < dyhat.size(); ++i) {
    const double raw = params.alpha_raw[i];
    // d(yhat)/d(raw) = yhat*(yhat-1)/alpha * dalpha/draw, with
    // alpha = -softplus(raw) and dalpha/draw = -sigmoid(raw); the ratio
    // sigmoid/softplus stays finite as raw -> -inf.
    const double sp = softplus(raw);
    const double ratio = sp > 1e-12 ? sigmoid(raw) / sp : 1.0;
    grads.alpha_raw[i] +=
        dyhat[i] * cache.yhat[i] * (1.0 - cache.yhat[i]) * (-ratio);
  }
  grads.w_pred += dz * cache.pooled.transpose();
  grads.theta_pred -= dz;
  Vec dpooled = params.w_pred.transpose() * dz;

  // Pooling: mean over t rows.
  const auto t = cache.attn_out.rows();
  Mat dattn_out = (1.0 / static_cast<double>(t)) *
                  (Mat::Ones(t, 1) * dpooled.transpose());

  // Output projection.
  grads.wo += dattn_out.transpose() * cache.concat;
  Mat dconcat = dattn_out * params.wo;

  // Attention heads.
  const int dh = hp.d_head();
  const double scale = 1.0 / std::sqrt(static_cast<double>(dh));
  Mat dx = Mat::Zero(t, hp.q);
  for (int h = 0; h < hp.n_head; ++h) {
    const auto& hc = cache.heads[static_cast<std::size_t>(h)];
    const Mat dhead = dconcat.middleCols(static_cast<Eigen::Index>(h) * dh, dh);
    const Mat dattn = dhead * hc.v.transpose();
    const Mat dv = hc.attn.transpose() * dhead;
    const Mat dscores = softmax_rows_backward(hc.attn, dattn);
    const Mat dq = dscores * hc.k * scale;
    const Mat dk = dscores.transpose() * hc.q * scale;

    const auto hi = static_cast<std::size_t>(h);
    const Mat& x_in = hp.k > 0 ? cache.blocks.back().n_pre.cwiseMax(0.0) : cache.x1;
    grads.wq[hi] += dq.transpose() * x_in;
    grads.wk[hi] += dk.transpose() * x_in;
    grads.wv[hi] += dv.transpose() * x_in;
    dx += dq * params.wq[hi] + dk * params.wk[hi] + dv * params.wv[hi];
  }

  // Residual blocks, in reverse.
  for (int bi = hp.k - 1; bi >= 0; --bi) {
    const auto& bc = cache.blocks[static_cast<std::size_t>(bi)];
    const auto& block = params.blocks[static_cast<std::size_t>(bi)];
    auto& gblock = grads.blocks[static_cast<std::size_t>(bi)];

    // Final ReLU then layer norm.
    const Mat dn = (bc.n_pre.array() > 0.0).select(dx, Mat::Zero(dx.rows(), dx.cols()));
    gblock.ln_gain += (dn.array() * bc.xhat.array()).colwise().sum().matrix().transpose();
    gblock.ln_bias += dn.colwise().sum().transpose();

    const Mat dxhat = (dn.array().rowwise() * block.ln_gain.transpose().array()).matrix();
    Mat dresidual(dn.rows(), dn.cols());
    const auto q = static_cast<double>(dn.cols());
    for (Eigen::Index row = 0; row < dn.rows(); ++row) {
      const double m1 = dxhat.row(row).sum() / q;
      const double m2 = dxhat.row(row).dot(bc.xhat.row(row)) / q;
      dresidual.row(row) =
          (bc.inv_std[row] *
           (dxhat.row(row).array() - m1 - bc.xhat.row(row).array() * m2))
              .matrix();
    }

    // Residual splits into the skip path and the h_b branch.
    const Mat db = dresidual.cwiseProduct(bc.b_mask);
    gblock.wb += db.transpose() * bc.z;
    gblock.theta_b -= db.colwise().sum().transpose();
    const Mat dz_inner = db * block.wb;

    const Mat da_drop =
        (bc.a_drop.array() > 0.0).select(dz_inner, Mat::Zero(dz_inner.rows(), dz_inner.cols()));
    const Mat da = da_drop.cwiseProduct(bc.a_mask);
    gblock.wa += da.transpose() * bc.input;
    gblock.theta_a -= da.colwise().sum().transpose();

    dx = dresidual + da * block.wa;
  }

  // First projection.
  const Mat dh1 = (cache.h1_pre.array() > 0.0).select(dx, Mat::Zero(dx.rows(), dx.cols()));
  grads.w1 += dh1.transpose() * cache.x0;
  grads.theta1 -= dh1.colwise().sum().transpose();
}

}  // namespace nilm::cold
