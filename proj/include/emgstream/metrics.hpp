#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "emgstream/recording.hpp"
#include "emgstream/stream.hpp"

namespace emgstream {

enum class TransitionVerdict { Correct, BufferViolation, MaintenanceViolation, Unscored };

const char* verdict_name(TransitionVerdict v);

/// One ground-truth label change with its reaction buffer and maintenance
/// period (both inclusive index ranges; maintenance may be empty when the
/// next buffer abuts).
struct TransitionEvent {
  int64_t tau = 0;
  int y_old = 0, y_new = 0;
  int64_t buffer_begin = 0, buffer_end = 0;
  int64_t maintenance_begin = 0, maintenance_end = 0;  // empty iff begin > end
  TransitionVerdict verdict = TransitionVerdict::Unscored;
  std::optional<int64_t> predicted_switch_time;
};

struct LatencyStats {
  double mean_ms = 0;
  double median_ms = 0;
  std::vector<double> offsets_ms;
};

struct MetricsConfig {
  int buffer_half_width = 100;  // +-0.5 s at 200 Hz
  int sample_rate_hz = 200;
};

struct PerClassAccuracy {
  std::string name;
  int64_t total = 0;
  int64_t correct = 0;
};

struct MetricsReport {
  std::optional<double> raw_accuracy;
  int64_t raw_compared = 0;
  std::optional<double> transition_accuracy;
  int scored_transitions = 0;
  int correct_transitions = 0;
  std::vector<TransitionEvent> events;
  std::optional<LatencyStats> latency;
  std::vector<PerClassAccuracy> per_class;
  // Configuration echo.
  int buffer_half_width = 0;
  int lookahead = 0, hold = 0, inference_stride = 0, window_len = 0;
  int sample_rate_hz = 0;
  std::string subject_id, session_id;
};

/// Fraction of defined (post-warmup) timesteps where pred == truth.
/// Throws Error(Alignment) on length mismatch, Error(InvalidArg) when no
/// timestep is defined.
double raw_accuracy(const std::vector<int>& pred, const std::vector<int>& truth,
                    int64_t warmup_end);

/// Scores every ground-truth change point. Correct requires (a) only
/// {y_old, y_new} predictions inside the buffer, (b) an observed switch to
/// y_new inside the buffer after some earlier y_old prediction, and (c) a
/// spotless maintenance period. Buffers touching warmup or the stream edges
/// are Unscored.
std::vector<TransitionEvent> score_transitions(const std::vector<int>& pred,
                                               const std::vector<int>& truth, int64_t warmup_end,
                                               int buffer_half_width);

/// |predicted_switch_time - tau| in milliseconds over Correct events.
LatencyStats latency_offsets(const std::vector<TransitionEvent>& events, int sample_rate_hz);

MetricsReport evaluate(const PredictionStream& pred, const Recording& truth,
                       const MetricsConfig& cfg);

/// Zero-order-hold upsampling of sparse (timestep, label) decisions to a
/// dense per-timestep track; timesteps before the first decision are
/// undefined.
std::vector<int> upsample_zoh(const std::vector<std::pair<int64_t, int>>& decisions,
                              int64_t total_len);

}  // namespace emgstream
