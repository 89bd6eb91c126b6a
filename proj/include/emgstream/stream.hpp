#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <vector>

#include "emgstream/recording.hpp"

namespace emgstream {

inline constexpr int kUndefinedLabel = -1;

struct StreamConfig {
  int window_len = 600;
  int lookahead = 50;       // timesteps of future context per decision
  int hold = 20;            // emitted label latch, timesteps
  int inference_stride = 10;  // spacing between participating window endpoints
  int sample_rate_hz = 200;

  double update_rate_hz() const {
    return static_cast<double>(sample_rate_hz) / static_cast<double>(hold);
  }
  void validate() const;  // throws Error(Config)
};

struct DecisionRecord {
  int64_t t = 0;  // decision timestep
  int label = 0;
  Eigen::VectorXd logits;  // aggregated K-vector
  int windows_used = 0;
  int64_t max_sample_read = 0;  // causality audit: highest sample index consumed
  double wall_ms = 0;
};

/// Per-timestep emitted labels aligned to the source recording's time axis.
struct PredictionStream {
  std::vector<int> labels;  // length T_total; kUndefinedLabel before warmup
  int64_t warmup_end = 0;   // first timestep with a defined label
  StreamConfig config;
  int num_classes = 0;
  std::vector<DecisionRecord> decisions;
};

/// Dense per-window predictor: T x C window -> T x K logits.
using WindowPredictor = std::function<Eigen::MatrixXd(const Eigen::MatrixXd&)>;

/// Average the per-window logit rows for one absolute timestep and take the
/// argmax; ties resolve to the lowest class index.
int aggregate_argmax(const std::vector<Eigen::VectorXd>& logit_rows, Eigen::VectorXd* avg_out);

/// One decision at timestep t: runs every window of length T whose final
/// sample lies in [t, t + lookahead] on the participating-end grid, extracts
/// each window's logits at t, averages, and argmaxes. Never touches a sample
/// beyond t + lookahead.
DecisionRecord decide(int64_t t, const Recording& rec, const WindowPredictor& model,
                      int num_classes, const StreamConfig& cfg);

/// Chronological replay: decisions at warmup_end, warmup_end + hold, ...;
/// each label is held for the next `hold` timesteps. The recording must have
/// been preprocessed the same way as the training data.
PredictionStream run_stream(const Recording& rec, const WindowPredictor& model, int num_classes,
                            const StreamConfig& cfg);

void save_prediction(const PredictionStream& pred, const std::string& path, bool with_logits);
PredictionStream load_prediction(const std::string& path);

}  // namespace emgstream
