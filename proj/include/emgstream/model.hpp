#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "emgstream/masking.hpp"

namespace emgstream {

struct ModelHyper {
  int embed_dim = 128;   // d
  int num_heads = 4;     // H
  int num_layers = 2;    // L
  double dropout = 0.15;
  int window_len = 600;  // T
  int channels = 8;      // C
  int num_classes = 0;   // K, dataset dependent

  int head_dim() const { return embed_dim / num_heads; }
  int seq_len() const { return 2 * window_len; }
  void validate() const;  // throws Error(Config)
};

struct LayerNormParams {
  Eigen::VectorXd gamma, beta;
};

struct EncoderLayerParams {
  LayerNormParams ln_attn, ln_ffn;
  Eigen::MatrixXd w_q, w_k, w_v, w_o;  // d x d
  Eigen::VectorXd b_q, b_k, b_v, b_o;  // d
  Eigen::MatrixXd w_ff1;               // d x 4d
  Eigen::VectorXd b_ff1;               // 4d
  Eigen::MatrixXd w_ff2;               // 4d x d
  Eigen::VectorXd b_ff2;               // d
};

/// All learnable arrays plus the fixed sinusoidal positional table.
struct ModelParams {
  ModelHyper hyper;
  Eigen::MatrixXd emg_proj_w;       // C x d
  Eigen::VectorXd emg_proj_b;       // d
  Eigen::MatrixXd intent_embed;     // (K+1) x d; row K is the mask token
  Eigen::VectorXd emg_mask_vector;  // d
  Eigen::MatrixXd modality_enc;     // 2 x d (row 0 EMG, row 1 intent)
  Eigen::MatrixXd pos_enc;          // T x d, fixed sinusoidal (not trained)
  std::vector<EncoderLayerParams> layers;
  LayerNormParams final_norm;
  Eigen::MatrixXd emg_head_w;     // d x C
  Eigen::VectorXd emg_head_b;     // C
  Eigen::MatrixXd intent_head_w;  // d x K
  Eigen::VectorXd intent_head_b;  // K

  static ModelParams init(const ModelHyper& hyper, uint64_t seed);
  static ModelParams zeros_like(const ModelParams& other);
  void set_zero();
};

/// Flat view over one named parameter array.
struct ParamView {
  std::string name;
  double* data = nullptr;
  int64_t size = 0;
  bool decay = false;      // weight decay applies
  bool trainable = false;  // excluded: the fixed positional table
};

/// Fixed-order enumeration of all parameter arrays; grads returned by
/// grad containers produced with zeros_like() align index-by-index.
std::vector<ParamView> param_views(ModelParams& p);

Eigen::MatrixXd sinusoidal_positions(int rows, int dim);

struct ForwardResult {
  Eigen::MatrixXd emg_out;        // T x C
  Eigen::MatrixXd intent_logits;  // T x K
};

/// Activation cache for one forward pass; reusable across examples of the
/// same shape to avoid reallocation.
struct LayerTape {
  Eigen::MatrixXd input;
  Eigen::MatrixXd ln1_xhat;
  Eigen::VectorXd ln1_rstd;
  Eigen::MatrixXd q, k, v;
  std::vector<Eigen::MatrixXd> probs;  // per head, S x S
  Eigen::MatrixXd ctx;
  Eigen::MatrixXd attn_drop;  // empty when dropout inactive
  Eigen::MatrixXd z2;
  Eigen::MatrixXd ln2_xhat;
  Eigen::VectorXd ln2_rstd;
  Eigen::MatrixXd f1, phi, g;
  Eigen::MatrixXd ffn_drop;
};

struct Tape {
  Eigen::MatrixXd z0;
  std::vector<LayerTape> layers;
  Eigen::MatrixXd encoder_out;
  Eigen::MatrixXd fin_xhat;
  Eigen::VectorXd fin_rstd;
  Eigen::MatrixXd y;  // final-norm output
  bool attention_block = false;
  bool dropout_active = false;
};

/// Multimodal input z = [EMG embeddings; intent embeddings], 2T x d.
/// Masked EMG rows are swapped for the learned mask vector after projection
/// and before the modality/positional additions; masked intent rows use the
/// mask-token embedding.
Eigen::MatrixXd embed(const MaskedExample& ex, const ModelParams& p);

/// Encoder stack plus both heads. When attention_block is set, attention
/// from EMG query positions to intent key positions is disabled. Dropout is
/// active only in train_mode and is derived deterministically from
/// dropout_seed. Throws Error(Numeric) naming the layer on non-finite
/// activations.
ForwardResult forward(const Eigen::MatrixXd& z, const ModelParams& p, bool attention_block,
                      bool train_mode, uint64_t dropout_seed, Tape* tape = nullptr);

struct LossBreakdown {
  double total = 0, mse = 0, ce = 0;
  int64_t emg_pairs = 0;     // |M_E|
  int64_t intent_count = 0;  // |M_A| actually scored
};

/// Masked objective: MSE over M_E pairs normalized by |M_E| plus CE over
/// M_A normalized by |M_A|; an empty mask set's term is omitted. Throws
/// Error(InvalidArg) when both sets are empty.
LossBreakdown masked_loss(const ForwardResult& out, const MaskedExample& ex);

LossBreakdown example_loss(const MaskedExample& ex, const ModelParams& p, bool train_mode,
                           uint64_t dropout_seed);

/// Forward + reverse pass; accumulates loss_scale * dL/dtheta into grads
/// (same layout as the params). Returns the (unscaled) loss breakdown.
LossBreakdown example_grad(const MaskedExample& ex, const ModelParams& p, bool train_mode,
                           uint64_t dropout_seed, double loss_scale, ModelParams& grads,
                           Tape* tape = nullptr);

/// Inference: all intent tokens masked, EMG unmasked, dropout off.
/// Returns T x K per-timestep logits.
Eigen::MatrixXd predict_window(const Eigen::MatrixXd& emg_window, const ModelParams& p);

}  // namespace emgstream
