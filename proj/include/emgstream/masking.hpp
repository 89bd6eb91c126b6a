#pragma once

#include <Eigen/Core>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "emgstream/recording.hpp"
#include "emgstream/rng.hpp"

namespace emgstream {

enum class MaskTask { ActionRecon = 0, EmgRecon = 1, JointRecon = 2, SelfSupervisedEmg = 3 };
enum class MaskType { Span = 0, EndOfWindow = 1, Transition = 2 };

const char* mask_task_name(MaskTask t);
const char* mask_type_name(MaskType t);

/// Per-example mask sets. EMG masking is channel-aligned: a timestep in
/// emg_times stands for the (t, c) pairs over every channel c.
struct MaskSpec {
  MaskTask task = MaskTask::ActionRecon;
  MaskType mask_type = MaskType::Span;
  std::vector<int> emg_times;     // sorted, unique; time projection of M_E
  std::vector<int> intent_times;  // sorted, unique; M_A
  bool attention_block_emg_to_intent = false;

  int64_t emg_pair_count(int channels) const {
    return static_cast<int64_t>(emg_times.size()) * channels;
  }
};

struct MaskConfig {
  double lambda_span = 7.0;
  /// Mask-type mixture (span, end, transition). The transition entry applies
  /// only to action reconstruction; other tasks renormalize over (span, end).
  std::array<double, 3> mix{0.5, 0.25, 0.25};
  double p_min_span = 0.15, p_max_span = 0.50;
  double p_min_end = 0.15, p_max_end = 0.50;
  int transition_buffer_radius = 50;
  uint64_t rng_seed = 42;

  /// Throws Error(Config) on negative/non-normalized mixture or bad p ranges.
  void validate() const;
};

/// One training window with its masks; emg holds preprocessed values.
struct MaskedExample {
  int64_t window_id = 0;
  Eigen::MatrixXd emg;      // T x C
  std::vector<int> labels;  // length T
  bool labels_valid = true; // false for the self-supervised (unlabeled) regime
  MaskSpec mask;
};

/// Union of Poisson-length spans until coverage reaches floor(p_t * T) with
/// p_t ~ U[p_min, p_max]. Span lengths are clamped to [1, T].
std::vector<int> sample_span_mask(int window_len, double lambda, double p_min, double p_max, Rng& rng);

/// Contiguous suffix of length floor(p_t * T), p_t ~ U[p_min, p_max].
std::vector<int> sample_end_mask(int window_len, double p_min, double p_max, Rng& rng);

/// Union of [tau - r, tau + r] over all label change points tau; empty when
/// the labels are constant (caller falls back to span masking).
std::vector<int> sample_transition_mask(const std::vector<int>& labels, int buffer_radius);

/// RNG sub-stream for one (epoch, window, task) triple; identical seeds
/// reproduce identical masks bit-exactly.
Rng mask_stream(const MaskConfig& cfg, uint64_t epoch, uint64_t window_id, MaskTask task);

MaskedExample make_masked_example(const Window& window, int64_t window_id, MaskTask task,
                                  const MaskConfig& cfg, Rng& rng);

}  // namespace emgstream
