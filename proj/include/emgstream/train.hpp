#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "emgstream/masking.hpp"
#include "emgstream/model.hpp"
#include "emgstream/recording.hpp"

namespace emgstream {

struct TrainConfig {
  int batch_size = 128;
  int epochs = 12;
  double learning_rate = 1e-4;
  double warmup_ratio = 0.05;
  double weight_decay = 0.01;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  uint64_t seed = 42;
  double val_subject_fraction = 0.10;
  /// Gradient work is chunked over this many workers with a fixed reduction
  /// order, so results are bit-reproducible for a given thread count.
  int threads = 2;
  bool include_self_supervised = false;

  void validate() const;
};

/// Piecewise-linear schedule: 0 -> peak over the warmup steps, then linear
/// to 0 at total_steps. Continuous at the junction.
double lr_at_step(const TrainConfig& cfg, int64_t step, int64_t total_steps);

int64_t warmup_steps(const TrainConfig& cfg, int64_t total_steps);

/// Decoupled-weight-decay Adam over the trainable parameter arrays. Decay
/// applies to weight matrices and embeddings, not biases or norm parameters.
class AdamW {
 public:
  AdamW(const ModelParams& shape, const TrainConfig& cfg);
  void step(ModelParams& params, ModelParams& grads, double lr);

 private:
  ModelParams m_, v_;
  TrainConfig cfg_;
  int64_t t_ = 0;
};

struct EpochLog {
  int epoch = 0;
  double train_loss = 0, train_mse = 0, train_ce = 0;
  double val_loss = 0;
  double lr_last = 0;
};

struct TrainResult {
  ModelParams params;  // lowest-validation-loss checkpoint
  std::vector<EpochLog> log;
  int best_epoch = -1;
  double best_val_loss = 0;
  std::vector<std::string> train_subjects, val_subjects;
};

/// Subject-level split: deterministically holds out
/// max(1, floor(fraction * n_subjects)) subjects for validation.
void split_subjects(const std::vector<Recording>& recs, double fraction, uint64_t seed,
                    std::vector<std::string>& train_out, std::vector<std::string>& val_out);

/// Trains on preprocessed recordings. Each window is duplicated across the
/// supervised masking tasks, with masks re-sampled every epoch. Returns the
/// checkpoint with the lowest validation loss.
TrainResult train(const std::vector<Recording>& recs, const ModelHyper& hyper,
                  const TrainConfig& cfg, const MaskConfig& mask_cfg, const WindowSpec& wspec);

std::string format_train_log(const std::vector<EpochLog>& log);

}  // namespace emgstream
