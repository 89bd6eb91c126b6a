#include "emgstream/model.hpp"

#include <cmath>

#include "emgstream/error.hpp"

namespace emgstream {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr double kLnEps = 1e-5;
constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

enum DropSite : uint64_t { kAttnSite = 0, kFfnSite = 1 };

void layer_norm_forward(const MatrixXd& x, const LayerNormParams& ln, MatrixXd& xhat,
                        VectorXd& rstd, MatrixXd& out) {
  const VectorXd mu = x.rowwise().mean();
  xhat = x.colwise() - mu;
  const VectorXd var = xhat.array().square().rowwise().mean().matrix();
  rstd = (var.array() + kLnEps).rsqrt().matrix();
  xhat = (xhat.array().colwise() * rstd.array()).matrix();
  out = ((xhat.array().rowwise() * ln.gamma.transpose().array()).rowwise() +
         ln.beta.transpose().array())
            .matrix();
}

/// dx is overwritten; dgamma/dbeta are accumulated.
void layer_norm_backward(const MatrixXd& dy, const MatrixXd& xhat, const VectorXd& rstd,
                         const LayerNormParams& ln, LayerNormParams& dln, MatrixXd& dx) {
  dln.gamma += (dy.array() * xhat.array()).colwise().sum().matrix().transpose();
  dln.beta += dy.colwise().sum().transpose();
  const MatrixXd dxhat = (dy.array().rowwise() * ln.gamma.transpose().array()).matrix();
  const VectorXd m1 = dxhat.rowwise().mean();
  const VectorXd m2 = (dxhat.array() * xhat.array()).rowwise().mean().matrix();
  dx = (((dxhat.colwise() - m1).array() - xhat.array().colwise() * m2.array()).colwise() *
        rstd.array())
           .matrix();
}

void recompute_ln_out(const MatrixXd& xhat, const LayerNormParams& ln, MatrixXd& out) {
  out = ((xhat.array().rowwise() * ln.gamma.transpose().array()).rowwise() +
         ln.beta.transpose().array())
            .matrix();
}

void fill_dropout(MatrixXd& mask, Eigen::Index rows, Eigen::Index cols, double rho,
                  uint64_t seed) {
  mask.resize(rows, cols);
  Rng rng(seed);
  const double keep = 1.0 - rho;
  const double inv = 1.0 / keep;
  double* d = mask.data();
  const Eigen::Index n = rows * cols;
  for (Eigen::Index i = 0; i < n; ++i) d[i] = (rng.uniform() < keep) ? inv : 0.0;
}

void softmax_rows_block(MatrixXd& m, Eigen::Index r0, Eigen::Index nr, Eigen::Index c0,
                        Eigen::Index nc) {
  auto blk = m.block(r0, c0, nr, nc);
  const VectorXd mx = blk.rowwise().maxCoeff();
  blk = (blk.colwise() - mx).array().exp().matrix();
  const VectorXd sum = blk.rowwise().sum();
  blk.array().colwise() /= sum.array();
}

std::vector<char> time_flags(const std::vector<int>& times, int len) {
  std::vector<char> f(static_cast<size_t>(len), 0);
  for (int t : times) {
    if (t < 0 || t >= len) fail(ErrorKind::Shape, "mask index " + std::to_string(t) + " outside window");
    f[static_cast<size_t>(t)] = 1;
  }
  return f;
}

}  // namespace

void ModelHyper::validate() const {
  if (embed_dim < 1 || num_heads < 1 || num_layers < 1 || window_len < 1 || channels < 1)
    fail(ErrorKind::Config, "model dimensions must be positive");
  if (num_classes < 1) fail(ErrorKind::Config, "num_classes must be >= 1");
  if (embed_dim % num_heads != 0)
    fail(ErrorKind::Config, "embed_dim (" + std::to_string(embed_dim) +
                                ") must be divisible by num_heads (" + std::to_string(num_heads) + ")");
  if (dropout < 0.0 || dropout >= 1.0) fail(ErrorKind::Config, "dropout must lie in [0, 1)");
}

Eigen::MatrixXd sinusoidal_positions(int rows, int dim) {
  MatrixXd pe(rows, dim);
  for (int t = 0; t < rows; ++t) {
    for (int i = 0; i < dim; i += 2) {
      const double freq = std::pow(10000.0, -static_cast<double>(i) / dim);
      pe(t, i) = std::sin(t * freq);
      if (i + 1 < dim) pe(t, i + 1) = std::cos(t * freq);
    }
  }
  return pe;
}

ModelParams ModelParams::init(const ModelHyper& hyper, uint64_t seed) {
  hyper.validate();
  const int d = hyper.embed_dim;
  const int c = hyper.channels;
  const int k = hyper.num_classes;
  Rng rng(derive_seed(seed, {0x696e6974ULL}));
  auto randn = [&rng](Eigen::Index r, Eigen::Index cc) {
    MatrixXd m(r, cc);
    for (Eigen::Index j = 0; j < cc; ++j)
      for (Eigen::Index i = 0; i < r; ++i) m(i, j) = 0.02 * rng.normal();
    return m;
  };

  ModelParams p;
  p.hyper = hyper;
  p.emg_proj_w = randn(c, d);
  p.emg_proj_b = VectorXd::Zero(d);
  p.intent_embed = randn(k + 1, d);
  p.emg_mask_vector = randn(d, 1);
  p.modality_enc = randn(2, d);
  p.pos_enc = sinusoidal_positions(hyper.window_len, d);
  p.layers.resize(static_cast<size_t>(hyper.num_layers));
  for (auto& l : p.layers) {
    l.ln_attn.gamma = VectorXd::Ones(d);
    l.ln_attn.beta = VectorXd::Zero(d);
    l.ln_ffn.gamma = VectorXd::Ones(d);
    l.ln_ffn.beta = VectorXd::Zero(d);
    l.w_q = randn(d, d);
    l.w_k = randn(d, d);
    l.w_v = randn(d, d);
    l.w_o = randn(d, d);
    l.b_q = VectorXd::Zero(d);
    l.b_k = VectorXd::Zero(d);
    l.b_v = VectorXd::Zero(d);
    l.b_o = VectorXd::Zero(d);
    l.w_ff1 = randn(d, 4 * d);
    l.b_ff1 = VectorXd::Zero(4 * d);
    l.w_ff2 = randn(4 * d, d);
    l.b_ff2 = VectorXd::Zero(d);
  }
  p.final_norm.gamma = VectorXd::Ones(d);
  p.final_norm.beta = VectorXd::Zero(d);
  p.emg_head_w = randn(d, c);
  p.emg_head_b = VectorXd::Zero(c);
  p.intent_head_w = randn(d, k);
  p.intent_head_b = VectorXd::Zero(k);
  return p;
}

ModelParams ModelParams::zeros_like(const ModelParams& other) {
  ModelParams p = other;
  p.set_zero();
  return p;
}

void ModelParams::set_zero() {
  for (const ParamView& v : param_views(*this))
    Eigen::Map<VectorXd>(v.data, v.size).setZero();
}

std::vector<ParamView> param_views(ModelParams& p) {
  std::vector<ParamView> out;
  auto add_mat = [&out](const std::string& name, MatrixXd& m, bool decay, bool trainable = true) {
    out.push_back({name, m.data(), m.size(), decay, trainable});
  };
  auto add_vec = [&out](const std::string& name, VectorXd& v, bool decay) {
    out.push_back({name, v.data(), v.size(), decay, true});
  };
  add_mat("emg_proj_w", p.emg_proj_w, true);
  add_vec("emg_proj_b", p.emg_proj_b, false);
  add_mat("intent_embed", p.intent_embed, true);
  add_vec("emg_mask_vector", p.emg_mask_vector, true);
  add_mat("modality_enc", p.modality_enc, true);
  add_mat("pos_enc", p.pos_enc, false, false);
  for (size_t l = 0; l < p.layers.size(); ++l) {
    auto& lp = p.layers[l];
    const std::string pre = "layer" + std::to_string(l) + ".";
    add_vec(pre + "ln_attn.gamma", lp.ln_attn.gamma, false);
    add_vec(pre + "ln_attn.beta", lp.ln_attn.beta, false);
    add_mat(pre + "w_q", lp.w_q, true);
    add_vec(pre + "b_q", lp.b_q, false);
    add_mat(pre + "w_k", lp.w_k, true);
    add_vec(pre + "b_k", lp.b_k, false);
    add_mat(pre + "w_v", lp.w_v, true);
    add_vec(pre + "b_v", lp.b_v, false);
    add_mat(pre + "w_o", lp.w_o, true);
    add_vec(pre + "b_o", lp.b_o, false);
    add_vec(pre + "ln_ffn.gamma", lp.ln_ffn.gamma, false);
    add_vec(pre + "ln_ffn.beta", lp.ln_ffn.beta, false);
    add_mat(pre + "w_ff1", lp.w_ff1, true);
    add_vec(pre + "b_ff1", lp.b_ff1, false);
    add_mat(pre + "w_ff2", lp.w_ff2, true);
    add_vec(pre + "b_ff2", lp.b_ff2, false);
  }
  add_vec("final_norm.gamma", p.final_norm.gamma, false);
  add_vec("final_norm.beta", p.final_norm.beta, false);
  add_mat("emg_head_w", p.emg_head_w, true);
  add_vec("emg_head_b", p.emg_head_b, false);
  add_mat("intent_head_w", p.intent_head_w, true);
  add_vec("intent_head_b", p.intent_head_b, false);
  return out;
}

Eigen::MatrixXd embed(const MaskedExample& ex, const ModelParams& p) {
  const int t_len = p.hyper.window_len;
  const int d = p.hyper.embed_dim;
  const int k = p.hyper.num_classes;
  if (ex.emg.rows() != t_len)
    fail(ErrorKind::Shape, "window length " + std::to_string(ex.emg.rows()) +
                               " != model window_len " + std::to_string(t_len));
  if (ex.emg.cols() != p.hyper.channels)
    fail(ErrorKind::Shape, "window channels " + std::to_string(ex.emg.cols()) +
                               " != model channels " + std::to_string(p.hyper.channels));
  if (static_cast<int>(ex.labels.size()) != t_len)
    fail(ErrorKind::Shape, "label track length != window length");

  const auto emg_masked = time_flags(ex.mask.emg_times, t_len);
  const auto intent_masked = time_flags(ex.mask.intent_times, t_len);

  MatrixXd z(2 * t_len, d);
  auto top = z.topRows(t_len);
  top.noalias() = ex.emg * p.emg_proj_w;
  top.rowwise() += p.emg_proj_b.transpose();
  for (int t = 0; t < t_len; ++t)
    if (emg_masked[static_cast<size_t>(t)]) top.row(t) = p.emg_mask_vector.transpose();
  top.rowwise() += p.modality_enc.row(0);
  top += p.pos_enc;

  auto bottom = z.bottomRows(t_len);
  for (int t = 0; t < t_len; ++t) {
    int row = k;  // mask token
    if (!intent_masked[static_cast<size_t>(t)]) {
      const int y = ex.labels[static_cast<size_t>(t)];
      if (y < 0 || y >= k) fail(ErrorKind::Shape, "label " + std::to_string(y) + " outside [0, K)");
      row = y;
    }
    bottom.row(t) = p.intent_embed.row(row);
  }
  bottom.rowwise() += p.modality_enc.row(1);
  bottom += p.pos_enc;
  return z;
}

ForwardResult forward(const MatrixXd& z, const ModelParams& p, bool attention_block,
                      bool train_mode, uint64_t dropout_seed, Tape* tape) {
  static thread_local Tape scratch_tape;
  Tape& tp = tape ? *tape : scratch_tape;

  const int d = p.hyper.embed_dim;
  const int t_len = p.hyper.window_len;
  const Eigen::Index s_len = 2 * t_len;
  const int heads = p.hyper.num_heads;
  const int dh = p.hyper.head_dim();
  const double alpha = 1.0 / std::sqrt(static_cast<double>(dh));
  if (z.rows() != s_len || z.cols() != d)
    fail(ErrorKind::Shape, "forward input must be 2T x d = " + std::to_string(s_len) + " x " +
                               std::to_string(d));

  const bool drop = train_mode && p.hyper.dropout > 0.0;
  tp.attention_block = attention_block;
  tp.dropout_active = drop;
  tp.layers.resize(p.layers.size());

  static thread_local MatrixXd act, proj, f2;
  act.resize(s_len, d);

  const MatrixXd* cur = &z;
  for (size_t l = 0; l < p.layers.size(); ++l) {
    LayerTape& lt = tp.layers[l];
    const EncoderLayerParams& lp = p.layers[l];
    lt.input = *cur;

    layer_norm_forward(lt.input, lp.ln_attn, lt.ln1_xhat, lt.ln1_rstd, act);
    lt.q.noalias() = act * lp.w_q;
    lt.q.rowwise() += lp.b_q.transpose();
    lt.k.noalias() = act * lp.w_k;
    lt.k.rowwise() += lp.b_k.transpose();
    lt.v.noalias() = act * lp.w_v;
    lt.v.rowwise() += lp.b_v.transpose();

    lt.probs.resize(static_cast<size_t>(heads));
    lt.ctx.resize(s_len, d);
    for (int h = 0; h < heads; ++h) {
      MatrixXd& pr = lt.probs[static_cast<size_t>(h)];
      pr.noalias() = lt.q.middleCols(h * dh, dh) * lt.k.middleCols(h * dh, dh).transpose();
      pr *= alpha;
      if (attention_block) {
        // EMG queries attend to EMG keys only; weights into the intent half
        // are removed before normalization.
        softmax_rows_block(pr, 0, t_len, 0, t_len);
        pr.topRightCorner(t_len, t_len).setZero();
        softmax_rows_block(pr, t_len, t_len, 0, s_len);
      } else {
        softmax_rows_block(pr, 0, s_len, 0, s_len);
      }
      lt.ctx.middleCols(h * dh, dh).noalias() = pr * lt.v.middleCols(h * dh, dh);
    }

    proj.noalias() = lt.ctx * lp.w_o;
    proj.rowwise() += lp.b_o.transpose();
    if (drop) {
      fill_dropout(lt.attn_drop, s_len, d, p.hyper.dropout,
                   derive_seed(dropout_seed, {static_cast<uint64_t>(l), kAttnSite}));
      proj.array() *= lt.attn_drop.array();
    } else {
      lt.attn_drop.resize(0, 0);
    }
    lt.z2 = lt.input + proj;

    layer_norm_forward(lt.z2, lp.ln_ffn, lt.ln2_xhat, lt.ln2_rstd, act);
    lt.f1.noalias() = act * lp.w_ff1;
    lt.f1.rowwise() += lp.b_ff1.transpose();
    lt.phi = lt.f1.unaryExpr([](double x) { return 0.5 * (1.0 + std::erf(x * kInvSqrt2)); });
    lt.g = (lt.f1.array() * lt.phi.array()).matrix();
    f2.noalias() = lt.g * lp.w_ff2;
    f2.rowwise() += lp.b_ff2.transpose();
    if (drop) {
      fill_dropout(lt.ffn_drop, s_len, d, p.hyper.dropout,
                   derive_seed(dropout_seed, {static_cast<uint64_t>(l), kFfnSite}));
      f2.array() *= lt.ffn_drop.array();
    } else {
      lt.ffn_drop.resize(0, 0);
    }

    tp.encoder_out = lt.z2 + f2;
    if (!tp.encoder_out.allFinite())
      fail(ErrorKind::Numeric, "non-finite activations in encoder layer " + std::to_string(l));
    cur = &tp.encoder_out;
  }

  layer_norm_forward(tp.encoder_out, p.final_norm, tp.fin_xhat, tp.fin_rstd, tp.y);

  ForwardResult out;
  out.emg_out.noalias() = tp.y.topRows(t_len) * p.emg_head_w;
  out.emg_out.rowwise() += p.emg_head_b.transpose();
  out.intent_logits.noalias() = tp.y.bottomRows(t_len) * p.intent_head_w;
  out.intent_logits.rowwise() += p.intent_head_b.transpose();
  return out;
}

LossBreakdown masked_loss(const ForwardResult& out, const MaskedExample& ex) {
  LossBreakdown lb;
  const int c = static_cast<int>(ex.emg.cols());
  const bool score_intent = ex.labels_valid && !ex.mask.intent_times.empty();
  if (ex.mask.emg_times.empty() && !score_intent)
    fail(ErrorKind::InvalidArg, "degenerate example: no scorable masked positions");

  if (!ex.mask.emg_times.empty()) {
    lb.emg_pairs = ex.mask.emg_pair_count(c);
    double acc = 0;
    for (int t : ex.mask.emg_times)
      for (int ch = 0; ch < c; ++ch) {
        const double diff = out.emg_out(t, ch) - ex.emg(t, ch);
        acc += diff * diff;
      }
    lb.mse = acc / static_cast<double>(lb.emg_pairs);
  }

  if (score_intent) {
    lb.intent_count = static_cast<int64_t>(ex.mask.intent_times.size());
    double acc = 0;
    for (int t : ex.mask.intent_times) {
      const auto row = out.intent_logits.row(t);
      const double m = row.maxCoeff();
      const double lse = m + std::log((row.array() - m).exp().sum());
      acc += lse - row(ex.labels[static_cast<size_t>(t)]);
    }
    lb.ce = acc / static_cast<double>(lb.intent_count);
  }

  lb.total = lb.mse + lb.ce;
  return lb;
}

LossBreakdown example_loss(const MaskedExample& ex, const ModelParams& p, bool train_mode,
                           uint64_t dropout_seed) {
  const MatrixXd z = embed(ex, p);
  const ForwardResult out = forward(z, p, ex.mask.attention_block_emg_to_intent, train_mode,
                                    dropout_seed, nullptr);
  return masked_loss(out, ex);
}

namespace {

/// Reverse pass through one encoder layer; d_out is the gradient w.r.t. the
/// layer output and d_in receives the gradient w.r.t. the layer input.
void layer_backward(const EncoderLayerParams& lp, EncoderLayerParams& gl, const LayerTape& lt,
                    int heads, int dh, bool attention_block, const MatrixXd& d_out,
                    MatrixXd& d_in) {
  const Eigen::Index s_len = lt.input.rows();
  const double alpha = 1.0 / std::sqrt(static_cast<double>(dh));

  static thread_local MatrixXd dz2, df, dg, df1, db_ln, act, d_attn, dctx, dq, dk, dv, da, dss;

  // FFN branch.
  if (lt.ffn_drop.size() > 0)
    df = (d_out.array() * lt.ffn_drop.array()).matrix();
  else
    df = d_out;
  gl.b_ff2 += df.colwise().sum().transpose();
  gl.w_ff2.noalias() += lt.g.transpose() * df;
  dg.noalias() = df * lp.w_ff2.transpose();
  // gelu'(x) = Phi(x) + x * pdf(x)
  df1 = (dg.array() *
         (lt.phi.array() + lt.f1.array() * (-0.5 * lt.f1.array().square()).exp() * kInvSqrt2Pi))
            .matrix();
  gl.b_ff1 += df1.colwise().sum().transpose();
  recompute_ln_out(lt.ln2_xhat, lp.ln_ffn, act);
  gl.w_ff1.noalias() += act.transpose() * df1;
  db_ln.noalias() = df1 * lp.w_ff1.transpose();
  layer_norm_backward(db_ln, lt.ln2_xhat, lt.ln2_rstd, lp.ln_ffn, gl.ln_ffn, dz2);
  dz2 += d_out;  // residual

  // Attention branch.
  if (lt.attn_drop.size() > 0)
    d_attn = (dz2.array() * lt.attn_drop.array()).matrix();
  else
    d_attn = dz2;
  gl.b_o += d_attn.colwise().sum().transpose();
  gl.w_o.noalias() += lt.ctx.transpose() * d_attn;
  dctx.noalias() = d_attn * lp.w_o.transpose();

  dq.resize(s_len, heads * dh);
  dk.resize(s_len, heads * dh);
  dv.resize(s_len, heads * dh);
  for (int h = 0; h < heads; ++h) {
    const MatrixXd& pr = lt.probs[static_cast<size_t>(h)];
    auto dctx_h = dctx.middleCols(h * dh, dh);
    dv.middleCols(h * dh, dh).noalias() = pr.transpose() * dctx_h;
    dss.noalias() = dctx_h * lt.v.middleCols(h * dh, dh).transpose();
    const VectorXd rs = (dss.array() * pr.array()).rowwise().sum().matrix();
    dss = (pr.array() * (dss.colwise() - rs).array()).matrix();
    // Blocked entries have pr == 0, so their score gradient vanishes.
    dq.middleCols(h * dh, dh).noalias() = alpha * (dss * lt.k.middleCols(h * dh, dh));
    dk.middleCols(h * dh, dh).noalias() = alpha * (dss.transpose() * lt.q.middleCols(h * dh, dh));
  }
  (void)attention_block;

  gl.b_q += dq.colwise().sum().transpose();
  gl.b_k += dk.colwise().sum().transpose();
  gl.b_v += dv.colwise().sum().transpose();
  recompute_ln_out(lt.ln1_xhat, lp.ln_attn, act);
  gl.w_q.noalias() += act.transpose() * dq;
  gl.w_k.noalias() += act.transpose() * dk;
  gl.w_v.noalias() += act.transpose() * dv;
  da.noalias() = dq * lp.w_q.transpose();
  da.noalias() += dk * lp.w_k.transpose();
  da.noalias() += dv * lp.w_v.transpose();
  layer_norm_backward(da, lt.ln1_xhat, lt.ln1_rstd, lp.ln_attn, gl.ln_attn, d_in);
  d_in += dz2;  // residual
}

}  // namespace

LossBreakdown example_grad(const MaskedExample& ex, const ModelParams& p, bool train_mode,
                           uint64_t dropout_seed, double loss_scale, ModelParams& grads,
                           Tape* tape) {
  static thread_local Tape scratch_tape;
  Tape& tp = tape ? *tape : scratch_tape;

  const int t_len = p.hyper.window_len;
  const int d = p.hyper.embed_dim;
  const int k = p.hyper.num_classes;
  const int c = p.hyper.channels;

  const MatrixXd z = embed(ex, p);
  const ForwardResult out =
      forward(z, p, ex.mask.attention_block_emg_to_intent, train_mode, dropout_seed, &tp);
  const LossBreakdown lb = masked_loss(out, ex);

  // Loss gradients, nonzero only on masked positions.
  MatrixXd d_emg_out = MatrixXd::Zero(t_len, c);
  if (lb.emg_pairs > 0) {
    const double scale = 2.0 * loss_scale / static_cast<double>(lb.emg_pairs);
    for (int t : ex.mask.emg_times)
      for (int ch = 0; ch < c; ++ch)
        d_emg_out(t, ch) = scale * (out.emg_out(t, ch) - ex.emg(t, ch));
  }
  MatrixXd d_logits = MatrixXd::Zero(t_len, k);
  if (lb.intent_count > 0) {
    const double scale = loss_scale / static_cast<double>(lb.intent_count);
    for (int t : ex.mask.intent_times) {
      const auto row = out.intent_logits.row(t);
      const double m = row.maxCoeff();
      Eigen::RowVectorXd probs = (row.array() - m).exp().matrix();
      probs /= probs.sum();
      d_logits.row(t) = scale * probs;
      d_logits(t, ex.labels[static_cast<size_t>(t)]) -= scale;
    }
  }

  // Heads.
  static thread_local MatrixXd dy, d_enc, d_prev;
  dy.resize(2 * t_len, d);
  grads.emg_head_w.noalias() += tp.y.topRows(t_len).transpose() * d_emg_out;
  grads.emg_head_b += d_emg_out.colwise().sum().transpose();
  dy.topRows(t_len).noalias() = d_emg_out * p.emg_head_w.transpose();
  grads.intent_head_w.noalias() += tp.y.bottomRows(t_len).transpose() * d_logits;
  grads.intent_head_b += d_logits.colwise().sum().transpose();
  dy.bottomRows(t_len).noalias() = d_logits * p.intent_head_w.transpose();

  layer_norm_backward(dy, tp.fin_xhat, tp.fin_rstd, p.final_norm, grads.final_norm, d_enc);

  for (int l = static_cast<int>(p.layers.size()) - 1; l >= 0; --l) {
    layer_backward(p.layers[static_cast<size_t>(l)], grads.layers[static_cast<size_t>(l)],
                   tp.layers[static_cast<size_t>(l)], p.hyper.num_heads, p.hyper.head_dim(),
                   tp.attention_block, d_enc, d_prev);
    std::swap(d_enc, d_prev);
  }

  // Embedding-level backward: d_enc now holds dL/dz0.
  const auto emg_masked = time_flags(ex.mask.emg_times, t_len);
  const auto intent_masked = time_flags(ex.mask.intent_times, t_len);
  grads.modality_enc.row(0) += d_enc.topRows(t_len).colwise().sum();
  grads.modality_enc.row(1) += d_enc.bottomRows(t_len).colwise().sum();

  static thread_local MatrixXd du;
  du = d_enc.topRows(t_len);
  for (int t = 0; t < t_len; ++t) {
    if (emg_masked[static_cast<size_t>(t)]) {
      grads.emg_mask_vector += du.row(t).transpose();
      du.row(t).setZero();
    }
  }
  grads.emg_proj_w.noalias() += ex.emg.transpose() * du;
  grads.emg_proj_b += du.colwise().sum().transpose();

  for (int t = 0; t < t_len; ++t) {
    const int row = intent_masked[static_cast<size_t>(t)] ? k : ex.labels[static_cast<size_t>(t)];
    grads.intent_embed.row(row) += d_enc.row(t_len + t);
  }
  return lb;
}

Eigen::MatrixXd predict_window(const MatrixXd& emg_window, const ModelParams& p) {
  MaskedExample ex;
  ex.emg = emg_window;
  ex.labels.assign(static_cast<size_t>(emg_window.rows()), 0);
  ex.labels_valid = false;
  ex.mask.task = MaskTask::ActionRecon;
  ex.mask.intent_times.resize(static_cast<size_t>(emg_window.rows()));
  for (size_t i = 0; i < ex.mask.intent_times.size(); ++i)
    ex.mask.intent_times[i] = static_cast<int>(i);
  const MatrixXd z = embed(ex, p);
  return forward(z, p, false, false, 0, nullptr).intent_logits;
}

}  // namespace emgstream
