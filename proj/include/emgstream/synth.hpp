#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "emgstream/recording.hpp"

namespace emgstream {

/// Scripted-intent multichannel EMG generator: per-class channel templates
/// (randomized per subject around shared base templates), sigmoid cross-fades
/// at gesture transitions, additive Gaussian noise. Labels switch at the
/// nominal transition instant (mid-ramp), deliberately making the annotation
/// an imprecise onset proxy.
struct SynthConfig {
  int subjects = 10;
  int channels = 8;
  int sample_rate_hz = 200;
  std::vector<std::string> class_names{"relax", "open", "close"};
  /// (gesture, hold seconds); defaults to "ROCORORCR" held 5 s each.
  std::vector<std::pair<std::string, double>> schedule;
  int onset_ramp_timesteps = 40;
  double noise_scale = 0.05;
  double subject_jitter = 0.08;
  double min_template_distance = 0.8;
  /// The schedule must cover at least one window of the downstream pipeline.
  int window_len = 600;
  uint64_t seed = 7;

  void validate() const;  // throws Error(Config)
  static std::vector<std::pair<std::string, double>> default_schedule(double hold_seconds = 5.0);
};

std::vector<Recording> synth_generate(const SynthConfig& cfg);

/// Shared per-class channel templates (K x C) for a given config seed.
Eigen::MatrixXd synth_class_templates(const SynthConfig& cfg);

/// Writes one CSV per subject plus manifest.json into out_dir; returns the
/// manifest.
Manifest synth_write(const SynthConfig& cfg, const std::string& out_dir);

}  // namespace emgstream
