#include "emgstream/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "emgstream/error.hpp"

namespace emgstream {

const char* verdict_name(TransitionVerdict v) {
  switch (v) {
    case TransitionVerdict::Correct: return "correct";
    case TransitionVerdict::BufferViolation: return "buffer_violation";
    case TransitionVerdict::MaintenanceViolation: return "maintenance_violation";
    case TransitionVerdict::Unscored: return "unscored";
  }
  return "unknown";
}

double raw_accuracy(const std::vector<int>& pred, const std::vector<int>& truth,
                    int64_t warmup_end) {
  if (pred.size() != truth.size())
    fail(ErrorKind::Alignment, "prediction length " + std::to_string(pred.size()) +
                                   " != truth length " + std::to_string(truth.size()));
  const int64_t n = static_cast<int64_t>(truth.size());
  if (warmup_end >= n)
    fail(ErrorKind::InvalidArg, "no defined timesteps: warmup covers the whole stream");
  int64_t hits = 0;
  for (int64_t t = std::max<int64_t>(0, warmup_end); t < n; ++t)
    if (pred[static_cast<size_t>(t)] == truth[static_cast<size_t>(t)]) ++hits;
  return static_cast<double>(hits) / static_cast<double>(n - std::max<int64_t>(0, warmup_end));
}

std::vector<TransitionEvent> score_transitions(const std::vector<int>& pred,
                                               const std::vector<int>& truth, int64_t warmup_end,
                                               int buffer_half_width) {
  if (pred.size() != truth.size())
    fail(ErrorKind::Alignment, "prediction length " + std::to_string(pred.size()) +
                                   " != truth length " + std::to_string(truth.size()));
  if (buffer_half_width < 1) fail(ErrorKind::InvalidArg, "buffer_half_width must be >= 1");
  const int64_t n = static_cast<int64_t>(truth.size());
  const int64_t b = buffer_half_width;

  std::vector<int64_t> taus;
  for (int64_t t = 1; t < n; ++t)
    if (truth[static_cast<size_t>(t)] != truth[static_cast<size_t>(t - 1)]) taus.push_back(t);

  std::vector<TransitionEvent> events;
  events.reserve(taus.size());
  for (size_t i = 0; i < taus.size(); ++i) {
    const int64_t tau = taus[i];
    TransitionEvent ev;
    ev.tau = tau;
    ev.y_old = truth[static_cast<size_t>(tau - 1)];
    ev.y_new = truth[static_cast<size_t>(tau)];
    ev.buffer_begin = tau - b;
    ev.buffer_end = tau + b;
    ev.maintenance_begin = tau + b + 1;
    ev.maintenance_end = (i + 1 < taus.size()) ? taus[i + 1] - b - 1 : n - 1;

    // Buffers that touch warmup or run off either stream edge are unscored.
    if (ev.buffer_begin < std::max<int64_t>(0, warmup_end) || ev.buffer_end > n - 1) {
      ev.verdict = TransitionVerdict::Unscored;
      events.push_back(ev);
      continue;
    }

    bool only_old_new = true;
    for (int64_t u = ev.buffer_begin; u <= ev.buffer_end; ++u) {
      const int p = pred[static_cast<size_t>(u)];
      if (p != ev.y_old && p != ev.y_new) {
        only_old_new = false;
        break;
      }
    }

    // Observed switch: y_new inside the buffer preceded by y_old anywhere
    // earlier in the defined stream (in or before the buffer).
    bool switched = false;
    std::optional<int64_t> first_new;
    bool seen_old = false;
    for (int64_t u = std::max<int64_t>(0, warmup_end); u <= ev.buffer_end && !switched; ++u) {
      const int p = pred[static_cast<size_t>(u)];
      if (u >= ev.buffer_begin && p == ev.y_new) {
        if (!first_new) first_new = u;
        if (seen_old) switched = true;
      }
      if (p == ev.y_old) seen_old = true;
    }
    if (!first_new) {
      // Still record the first in-buffer y_new for reporting even when the
      // switch condition failed early.
      for (int64_t u = ev.buffer_begin; u <= ev.buffer_end; ++u)
        if (pred[static_cast<size_t>(u)] == ev.y_new) {
          first_new = u;
          break;
        }
    }
    ev.predicted_switch_time = first_new;

    bool maintenance_ok = true;
    for (int64_t u = ev.maintenance_begin; u <= std::min<int64_t>(ev.maintenance_end, n - 1);
         ++u) {
      if (pred[static_cast<size_t>(u)] != ev.y_new) {
        maintenance_ok = false;
        break;
      }
    }

    if (!only_old_new || !switched)
      ev.verdict = TransitionVerdict::BufferViolation;
    else if (!maintenance_ok)
      ev.verdict = TransitionVerdict::MaintenanceViolation;
    else
      ev.verdict = TransitionVerdict::Correct;
    events.push_back(ev);
  }
  return events;
}

LatencyStats latency_offsets(const std::vector<TransitionEvent>& events, int sample_rate_hz) {
  if (sample_rate_hz < 1) fail(ErrorKind::InvalidArg, "sample_rate_hz must be >= 1");
  LatencyStats stats;
  for (const auto& ev : events) {
    if (ev.verdict != TransitionVerdict::Correct || !ev.predicted_switch_time) continue;
    const double off_ts = std::abs(static_cast<double>(*ev.predicted_switch_time - ev.tau));
    stats.offsets_ms.push_back(off_ts * 1000.0 / sample_rate_hz);
  }
  if (stats.offsets_ms.empty()) return stats;
  double sum = 0;
  for (double v : stats.offsets_ms) sum += v;
  stats.mean_ms = sum / static_cast<double>(stats.offsets_ms.size());
  std::vector<double> sorted = stats.offsets_ms;
  std::sort(sorted.begin(), sorted.end());
  const size_t m = sorted.size();
  stats.median_ms = (m % 2 == 1) ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
  return stats;
}

MetricsReport evaluate(const PredictionStream& pred, const Recording& truth,
                       const MetricsConfig& cfg) {
  if (static_cast<int64_t>(pred.labels.size()) != truth.length())
    fail(ErrorKind::Alignment, "prediction length " + std::to_string(pred.labels.size()) +
                                   " != recording length " + std::to_string(truth.length()));
  MetricsReport rep;
  rep.buffer_half_width = cfg.buffer_half_width;
  rep.sample_rate_hz = cfg.sample_rate_hz;
  rep.lookahead = pred.config.lookahead;
  rep.hold = pred.config.hold;
  rep.inference_stride = pred.config.inference_stride;
  rep.window_len = pred.config.window_len;
  rep.subject_id = truth.subject_id;
  rep.session_id = truth.session_id;

  const int64_t n = truth.length();
  const int64_t w0 = std::max<int64_t>(0, pred.warmup_end);
  rep.raw_compared = std::max<int64_t>(0, n - w0);
  if (rep.raw_compared > 0)
    rep.raw_accuracy = raw_accuracy(pred.labels, truth.labels, pred.warmup_end);

  rep.events = score_transitions(pred.labels, truth.labels, pred.warmup_end,
                                 cfg.buffer_half_width);
  for (const auto& ev : rep.events) {
    if (ev.verdict == TransitionVerdict::Unscored) continue;
    ++rep.scored_transitions;
    if (ev.verdict == TransitionVerdict::Correct) ++rep.correct_transitions;
  }
  if (rep.scored_transitions > 0)
    rep.transition_accuracy =
        static_cast<double>(rep.correct_transitions) / rep.scored_transitions;

  const LatencyStats lat = latency_offsets(rep.events, cfg.sample_rate_hz);
  if (!lat.offsets_ms.empty()) rep.latency = lat;

  rep.per_class.resize(truth.class_names.size());
  for (size_t k = 0; k < truth.class_names.size(); ++k) rep.per_class[k].name = truth.class_names[k];
  for (int64_t t = w0; t < n; ++t) {
    const int y = truth.labels[static_cast<size_t>(t)];
    ++rep.per_class[static_cast<size_t>(y)].total;
    if (pred.labels[static_cast<size_t>(t)] == y) ++rep.per_class[static_cast<size_t>(y)].correct;
  }
  return rep;
}

std::vector<int> upsample_zoh(const std::vector<std::pair<int64_t, int>>& decisions,
                              int64_t total_len) {
  std::vector<int> out(static_cast<size_t>(total_len), kUndefinedLabel);
  for (size_t i = 0; i < decisions.size(); ++i) {
    const int64_t from = decisions[i].first;
    const int64_t to = (i + 1 < decisions.size()) ? decisions[i + 1].first : total_len;
    for (int64_t t = std::max<int64_t>(0, from); t < std::min(total_len, to); ++t)
      out[static_cast<size_t>(t)] = decisions[i].second;
  }
  return out;
}

}  // namespace emgstream
