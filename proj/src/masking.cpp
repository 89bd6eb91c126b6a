#include "emgstream/masking.hpp"

#include <algorithm>
#include <numeric>

#include "emgstream/error.hpp"

namespace emgstream {

const char* mask_task_name(MaskTask t) {
  switch (t) {
    case MaskTask::ActionRecon: return "action_recon";
    case MaskTask::EmgRecon: return "emg_recon";
    case MaskTask::JointRecon: return "joint_recon";
    case MaskTask::SelfSupervisedEmg: return "self_supervised_emg";
  }
  return "unknown";
}

const char* mask_type_name(MaskType t) {
  switch (t) {
    case MaskType::Span: return "span";
    case MaskType::EndOfWindow: return "end_of_window";
    case MaskType::Transition: return "transition";
  }
  return "unknown";
}

void MaskConfig::validate() const {
  double sum = 0;
  for (double w : mix) {
    if (w < 0) fail(ErrorKind::Config, "mask mixture weights must be non-negative");
    sum += w;
  }
  if (std::abs(sum - 1.0) > 1e-9) fail(ErrorKind::Config, "mask mixture weights must sum to 1");
  if (mix[0] + mix[1] <= 0)
    fail(ErrorKind::Config, "mask mixture needs nonzero span or end weight");
  auto check_range = [](double lo, double hi, const char* which) {
    if (!(0.0 <= lo && lo <= hi && hi <= 1.0))
      fail(ErrorKind::Config, std::string("mask proportion range invalid for ") + which);
  };
  check_range(p_min_span, p_max_span, "span");
  check_range(p_min_end, p_max_end, "end");
  if (lambda_span <= 0) fail(ErrorKind::Config, "lambda_span must be positive");
  if (transition_buffer_radius < 0) fail(ErrorKind::Config, "transition_buffer_radius must be >= 0");
}

namespace {

std::vector<int> flags_to_sorted(const std::vector<char>& flags) {
  std::vector<int> out;
  for (size_t i = 0; i < flags.size(); ++i)
    if (flags[i]) out.push_back(static_cast<int>(i));
  return out;
}

}  // namespace

std::vector<int> sample_span_mask(int window_len, double lambda, double p_min, double p_max, Rng& rng) {
  const double p = rng.uniform(p_min, p_max);
  const int target = static_cast<int>(p * window_len);
  if (target <= 0) return {};
  std::vector<char> flags(static_cast<size_t>(window_len), 0);
  int covered = 0;
  while (covered < target) {
    int len = rng.poisson(lambda);
    len = std::clamp(len, 1, window_len);
    const int start = static_cast<int>(rng.uniform_int(static_cast<uint64_t>(window_len)));
    const int end = std::min(start + len, window_len);
    for (int t = start; t < end; ++t) {
      if (!flags[static_cast<size_t>(t)]) {
        flags[static_cast<size_t>(t)] = 1;
        ++covered;
      }
    }
  }
  return flags_to_sorted(flags);
}

std::vector<int> sample_end_mask(int window_len, double p_min, double p_max, Rng& rng) {
  const double p = rng.uniform(p_min, p_max);
  const int n = static_cast<int>(p * window_len);
  std::vector<int> out;
  out.reserve(static_cast<size_t>(n));
  for (int t = window_len - n; t < window_len; ++t) out.push_back(t);
  return out;
}

std::vector<int> sample_transition_mask(const std::vector<int>& labels, int buffer_radius) {
  const int n = static_cast<int>(labels.size());
  std::vector<char> flags(static_cast<size_t>(n), 0);
  bool any = false;
  for (int tau = 1; tau < n; ++tau) {
    if (labels[static_cast<size_t>(tau)] == labels[static_cast<size_t>(tau - 1)]) continue;
    any = true;
    const int lo = std::max(0, tau - buffer_radius);
    const int hi = std::min(n - 1, tau + buffer_radius);
    for (int t = lo; t <= hi; ++t) flags[static_cast<size_t>(t)] = 1;
  }
  if (!any) return {};
  return flags_to_sorted(flags);
}

Rng mask_stream(const MaskConfig& cfg, uint64_t epoch, uint64_t window_id, MaskTask task) {
  return Rng(derive_seed(cfg.rng_seed, {epoch, window_id, static_cast<uint64_t>(task)}));
}

namespace {

MaskType pick_mask_type(MaskTask task, const MaskConfig& cfg, Rng& rng) {
  double w_span = cfg.mix[0];
  double w_end = cfg.mix[1];
  double w_trans = (task == MaskTask::ActionRecon) ? cfg.mix[2] : 0.0;
  const double total = w_span + w_end + w_trans;
  const double u = rng.uniform() * total;
  if (u < w_span) return MaskType::Span;
  if (u < w_span + w_end) return MaskType::EndOfWindow;
  return MaskType::Transition;
}

/// Non-empty time mask of the requested type; transition masking falls back
/// to span when the window has no change point, and supervised tasks get at
/// least one masked timestep even when floor(p*T) is zero.
std::vector<int> sample_time_mask(MaskType& type, const std::vector<int>& labels, int window_len,
                                  const MaskConfig& cfg, Rng& rng) {
  std::vector<int> times;
  if (type == MaskType::Transition) {
    times = sample_transition_mask(labels, cfg.transition_buffer_radius);
    if (times.empty()) type = MaskType::Span;  // fallback
  }
  if (type == MaskType::Span)
    times = sample_span_mask(window_len, cfg.lambda_span, cfg.p_min_span, cfg.p_max_span, rng);
  else if (type == MaskType::EndOfWindow)
    times = sample_end_mask(window_len, cfg.p_min_end, cfg.p_max_end, rng);
  if (times.empty()) times.push_back(static_cast<int>(rng.uniform_int(static_cast<uint64_t>(window_len))));
  return times;
}

}  // namespace

MaskedExample make_masked_example(const Window& window, int64_t window_id, MaskTask task,
                                  const MaskConfig& cfg, Rng& rng) {
  cfg.validate();
  const int t_len = static_cast<int>(window.emg.rows());
  if (t_len < 1) fail(ErrorKind::InvalidArg, "window must contain at least one timestep");

  MaskedExample ex;
  ex.window_id = window_id;
  ex.emg = window.emg;
  ex.labels = window.labels;
  ex.mask.task = task;

  switch (task) {
    case MaskTask::ActionRecon: {
      MaskType type = pick_mask_type(task, cfg, rng);
      ex.mask.intent_times = sample_time_mask(type, window.labels, t_len, cfg, rng);
      ex.mask.mask_type = type;
      break;
    }
    case MaskTask::EmgRecon: {
      MaskType type = pick_mask_type(task, cfg, rng);
      ex.mask.emg_times = sample_time_mask(type, window.labels, t_len, cfg, rng);
      ex.mask.mask_type = type;
      break;
    }
    case MaskTask::JointRecon: {
      MaskType type = pick_mask_type(task, cfg, rng);
      std::vector<int> times = sample_time_mask(type, window.labels, t_len, cfg, rng);
      ex.mask.emg_times = times;
      ex.mask.intent_times = std::move(times);
      ex.mask.mask_type = type;
      break;
    }
    case MaskTask::SelfSupervisedEmg: {
      // Unlabeled regime: all intent tokens masked, EMG->intent attention
      // blocked, span-based EMG masking only, no intent supervision.
      ex.mask.mask_type = MaskType::Span;
      ex.mask.emg_times =
          sample_span_mask(t_len, cfg.lambda_span, cfg.p_min_span, cfg.p_max_span, rng);
      if (ex.mask.emg_times.empty())
        ex.mask.emg_times.push_back(static_cast<int>(rng.uniform_int(static_cast<uint64_t>(t_len))));
      ex.mask.intent_times.resize(static_cast<size_t>(t_len));
      std::iota(ex.mask.intent_times.begin(), ex.mask.intent_times.end(), 0);
      ex.mask.attention_block_emg_to_intent = true;
      ex.labels_valid = false;
      break;
    }
  }
  return ex;
}

}  // namespace emgstream
