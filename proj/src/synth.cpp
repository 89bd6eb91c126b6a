#include "emgstream/synth.hpp"

#include <cmath>
#include <filesystem>

#include "emgstream/error.hpp"
#include "emgstream/rng.hpp"

namespace emgstream {

using Eigen::MatrixXd;

namespace fs = std::filesystem;

std::vector<std::pair<std::string, double>> SynthConfig::default_schedule(double hold_seconds) {
  const char* seq = "ROCORORCR";
  std::vector<std::pair<std::string, double>> out;
  for (const char* p = seq; *p; ++p) {
    switch (*p) {
      case 'R': out.emplace_back("relax", hold_seconds); break;
      case 'O': out.emplace_back("open", hold_seconds); break;
      case 'C': out.emplace_back("close", hold_seconds); break;
    }
  }
  return out;
}

void SynthConfig::validate() const {
  if (subjects < 1) fail(ErrorKind::Config, "synth: subjects must be >= 1");
  if (channels < 1) fail(ErrorKind::Config, "synth: channels must be >= 1");
  if (sample_rate_hz < 1) fail(ErrorKind::Config, "synth: sample_rate_hz must be >= 1");
  if (class_names.size() < 2) fail(ErrorKind::Config, "synth: needs at least 2 classes");
  if (onset_ramp_timesteps < 0) fail(ErrorKind::Config, "synth: ramp must be >= 0");
  if (noise_scale < 0) fail(ErrorKind::Config, "synth: noise_scale must be >= 0");
  const auto& sched = schedule.empty() ? default_schedule() : schedule;
  double total_s = 0;
  for (const auto& [gesture, hold] : sched) {
    if (hold < 1.0)
      fail(ErrorKind::Config, "synth: hold duration for \"" + gesture + "\" must be >= 1 s");
    total_s += hold;
    bool known = false;
    for (const auto& n : class_names) known = known || (n == gesture);
    if (!known) fail(ErrorKind::Config, "synth: schedule gesture \"" + gesture + "\" not in class list");
  }
  if (total_s * sample_rate_hz < window_len)
    fail(ErrorKind::Config, "synth: schedule covers " +
                                std::to_string(static_cast<int64_t>(total_s * sample_rate_hz)) +
                                " samples, shorter than one window of " + std::to_string(window_len));
}

Eigen::MatrixXd synth_class_templates(const SynthConfig& cfg) {
  const int k = static_cast<int>(cfg.class_names.size());
  const int c = cfg.channels;
  Rng rng(derive_seed(cfg.seed, {0x74656d70ULL}));  // "temp"
  MatrixXd g(k, c);
  // Class 0 is treated as rest: a low flat activation.
  for (int attempt = 0; attempt < 1000; ++attempt) {
    for (int ch = 0; ch < c; ++ch) g(0, ch) = 0.05;
    for (int i = 1; i < k; ++i)
      for (int ch = 0; ch < c; ++ch) g(i, ch) = rng.uniform(0.15, 0.9);
    double min_dist = 1e300;
    for (int i = 0; i < k; ++i)
      for (int j = i + 1; j < k; ++j)
        min_dist = std::min(min_dist, (g.row(i) - g.row(j)).norm());
    if (min_dist >= cfg.min_template_distance) return g;
  }
  fail(ErrorKind::Config, "synth: could not place class templates at the requested separation");
}

std::vector<Recording> synth_generate(const SynthConfig& cfg) {
  cfg.validate();
  const auto sched = cfg.schedule.empty() ? SynthConfig::default_schedule() : cfg.schedule;
  const int k = static_cast<int>(cfg.class_names.size());
  const int c = cfg.channels;
  const MatrixXd base = synth_class_templates(cfg);

  // Segment boundaries in samples.
  std::vector<int64_t> seg_len;
  std::vector<int> seg_class;
  int64_t total = 0;
  for (const auto& [gesture, hold] : sched) {
    const auto len = static_cast<int64_t>(std::llround(hold * cfg.sample_rate_hz));
    seg_len.push_back(len);
    total += len;
    int cls = -1;
    for (int i = 0; i < k; ++i)
      if (cfg.class_names[static_cast<size_t>(i)] == gesture) cls = i;
    seg_class.push_back(cls);
  }

  std::vector<Recording> out;
  out.reserve(static_cast<size_t>(cfg.subjects));
  for (int s = 0; s < cfg.subjects; ++s) {
    Rng rng(derive_seed(cfg.seed, {0x73756266ULL, static_cast<uint64_t>(s)}));  // "subj"
    MatrixXd tmpl = base;
    for (int i = 0; i < k; ++i)
      for (int ch = 0; ch < c; ++ch)
        tmpl(i, ch) = std::max(0.02, tmpl(i, ch) + cfg.subject_jitter * rng.normal());

    Recording rec;
    rec.subject_id = "s" + std::string(s < 10 ? "0" : "") + std::to_string(s);
    rec.session_id = "0";
    rec.sample_rate_hz = cfg.sample_rate_hz;
    rec.class_names = cfg.class_names;
    rec.samples.resize(total, c);
    rec.labels.resize(static_cast<size_t>(total));

    // Piecewise-constant envelope with a sigmoid cross-fade at each boundary.
    int64_t pos = 0;
    for (size_t i = 0; i < seg_len.size(); ++i) {
      for (int64_t t = 0; t < seg_len[i]; ++t) {
        rec.labels[static_cast<size_t>(pos + t)] = seg_class[i];
        rec.samples.row(pos + t) = tmpl.row(seg_class[i]);
      }
      pos += seg_len[i];
    }
    if (cfg.onset_ramp_timesteps > 0) {
      const double ramp = cfg.onset_ramp_timesteps;
      int64_t tau = 0;
      for (size_t i = 0; i + 1 < seg_len.size(); ++i) {
        tau += seg_len[i];
        if (seg_class[i] == seg_class[i + 1]) continue;
        const auto old_row = tmpl.row(seg_class[i]);
        const auto new_row = tmpl.row(seg_class[i + 1]);
        const int64_t lo = std::max<int64_t>(0, tau - cfg.onset_ramp_timesteps);
        const int64_t hi = std::min<int64_t>(total - 1, tau + cfg.onset_ramp_timesteps);
        for (int64_t t = lo; t <= hi; ++t) {
          const double w = 1.0 / (1.0 + std::exp(-8.0 * static_cast<double>(t - tau) / ramp));
          rec.samples.row(t) = old_row + w * (new_row - old_row);
        }
      }
    }
    if (cfg.noise_scale > 0) {
      for (int64_t t = 0; t < total; ++t)
        for (int ch = 0; ch < c; ++ch) rec.samples(t, ch) += cfg.noise_scale * rng.normal();
    }
    rec.validate();
    out.push_back(std::move(rec));
  }
  return out;
}

Manifest synth_write(const SynthConfig& cfg, const std::string& out_dir) {
  const auto recs = synth_generate(cfg);
  fs::create_directories(out_dir);
  Manifest m;
  m.sample_rate_hz = cfg.sample_rate_hz;
  m.channels = cfg.channels;
  m.class_names = cfg.class_names;
  m.base_dir = out_dir;
  for (const auto& rec : recs) {
    const std::string name = rec.subject_id + "_" + rec.session_id + ".csv";
    save_recording(rec, (fs::path(out_dir) / name).string());
    m.files.push_back({name, rec.subject_id, rec.session_id});
  }
  save_manifest(m, (fs::path(out_dir) / "manifest.json").string());
  return m;
}

}  // namespace emgstream
