#include "emgstream/config.hpp"

#include <fstream>
#include <set>

#include "emgstream/error.hpp"

namespace emgstream {

using nlohmann::json;

namespace {

template <typename T>
void opt(const json& j, const char* key, T& v) {
  if (j.contains(key)) j.at(key).get_to(v);
}

json parse_text(const std::string& text, const char* what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    fail(ErrorKind::Parse, std::string(what) + ": " + e.what());
  }
}

void reject_unknown(const json& j, const std::set<std::string>& known, const char* what) {
  if (!j.is_object()) fail(ErrorKind::Config, std::string(what) + ": expected a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it)
    if (!known.count(it.key()))
      fail(ErrorKind::Config, std::string(what) + ": unknown key \"" + it.key() + "\"");
}

}  // namespace

void to_json(json& j, const WindowSpec& w) {
  j = json{{"window_len", w.window_len}, {"stride", w.stride}};
}
void from_json(const json& j, WindowSpec& w) {
  opt(j, "window_len", w.window_len);
  opt(j, "stride", w.stride);
}

void to_json(json& j, const ModelHyper& h) {
  j = json{{"embed_dim", h.embed_dim},   {"num_heads", h.num_heads},
           {"num_layers", h.num_layers}, {"dropout", h.dropout},
           {"window_len", h.window_len}, {"channels", h.channels},
           {"num_classes", h.num_classes}};
}
void from_json(const json& j, ModelHyper& h) {
  opt(j, "embed_dim", h.embed_dim);
  opt(j, "num_heads", h.num_heads);
  opt(j, "num_layers", h.num_layers);
  opt(j, "dropout", h.dropout);
  opt(j, "window_len", h.window_len);
  opt(j, "channels", h.channels);
  opt(j, "num_classes", h.num_classes);
}

void to_json(json& j, const MaskConfig& m) {
  j = json{{"lambda_span", m.lambda_span},
           {"mix", m.mix},
           {"p_min_span", m.p_min_span},
           {"p_max_span", m.p_max_span},
           {"p_min_end", m.p_min_end},
           {"p_max_end", m.p_max_end},
           {"transition_buffer_radius", m.transition_buffer_radius},
           {"rng_seed", m.rng_seed}};
}
void from_json(const json& j, MaskConfig& m) {
  opt(j, "lambda_span", m.lambda_span);
  opt(j, "mix", m.mix);
  opt(j, "p_min_span", m.p_min_span);
  opt(j, "p_max_span", m.p_max_span);
  opt(j, "p_min_end", m.p_min_end);
  opt(j, "p_max_end", m.p_max_end);
  opt(j, "transition_buffer_radius", m.transition_buffer_radius);
  opt(j, "rng_seed", m.rng_seed);
}

void to_json(json& j, const TrainConfig& t) {
  j = json{{"batch_size", t.batch_size},
           {"epochs", t.epochs},
           {"learning_rate", t.learning_rate},
           {"warmup_ratio", t.warmup_ratio},
           {"weight_decay", t.weight_decay},
           {"adam_beta1", t.adam_beta1},
           {"adam_beta2", t.adam_beta2},
           {"adam_eps", t.adam_eps},
           {"seed", t.seed},
           {"val_subject_fraction", t.val_subject_fraction},
           {"threads", t.threads},
           {"include_self_supervised", t.include_self_supervised}};
}
void from_json(const json& j, TrainConfig& t) {
  opt(j, "batch_size", t.batch_size);
  opt(j, "epochs", t.epochs);
  opt(j, "learning_rate", t.learning_rate);
  opt(j, "warmup_ratio", t.warmup_ratio);
  opt(j, "weight_decay", t.weight_decay);
  opt(j, "adam_beta1", t.adam_beta1);
  opt(j, "adam_beta2", t.adam_beta2);
  opt(j, "adam_eps", t.adam_eps);
  opt(j, "seed", t.seed);
  opt(j, "val_subject_fraction", t.val_subject_fraction);
  opt(j, "threads", t.threads);
  opt(j, "include_self_supervised", t.include_self_supervised);
}

void to_json(json& j, const StreamConfig& s) {
  j = json{{"window_len", s.window_len},
           {"lookahead", s.lookahead},
           {"hold", s.hold},
           {"inference_stride", s.inference_stride},
           {"sample_rate_hz", s.sample_rate_hz}};
}
void from_json(const json& j, StreamConfig& s) {
  opt(j, "window_len", s.window_len);
  opt(j, "lookahead", s.lookahead);
  opt(j, "hold", s.hold);
  opt(j, "inference_stride", s.inference_stride);
  opt(j, "sample_rate_hz", s.sample_rate_hz);
}

void to_json(json& j, const SynthConfig& s) {
  j = json{{"subjects", s.subjects},
           {"channels", s.channels},
           {"sample_rate_hz", s.sample_rate_hz},
           {"class_names", s.class_names},
           {"schedule", s.schedule.empty() ? SynthConfig::default_schedule() : s.schedule},
           {"onset_ramp_timesteps", s.onset_ramp_timesteps},
           {"noise_scale", s.noise_scale},
           {"subject_jitter", s.subject_jitter},
           {"min_template_distance", s.min_template_distance},
           {"window_len", s.window_len},
           {"seed", s.seed}};
}
void from_json(const json& j, SynthConfig& s) {
  opt(j, "subjects", s.subjects);
  opt(j, "channels", s.channels);
  opt(j, "sample_rate_hz", s.sample_rate_hz);
  opt(j, "class_names", s.class_names);
  opt(j, "schedule", s.schedule);
  opt(j, "onset_ramp_timesteps", s.onset_ramp_timesteps);
  opt(j, "noise_scale", s.noise_scale);
  opt(j, "subject_jitter", s.subject_jitter);
  opt(j, "min_template_distance", s.min_template_distance);
  opt(j, "window_len", s.window_len);
  opt(j, "seed", s.seed);
}

void to_json(json& j, const MetricsConfig& m) {
  j = json{{"buffer_half_width", m.buffer_half_width}, {"sample_rate_hz", m.sample_rate_hz}};
}
void from_json(const json& j, MetricsConfig& m) {
  opt(j, "buffer_half_width", m.buffer_half_width);
  opt(j, "sample_rate_hz", m.sample_rate_hz);
}

void to_json(json& j, const TrainSpec& s) {
  j = json{{"model", s.hyper},
           {"train", s.train},
           {"mask", s.mask},
           {"window", s.window},
           {"median_window", s.median_window}};
}
void from_json(const json& j, TrainSpec& s) {
  opt(j, "model", s.hyper);
  opt(j, "train", s.train);
  opt(j, "mask", s.mask);
  opt(j, "window", s.window);
  opt(j, "median_window", s.median_window);
}

TrainSpec parse_train_spec(const std::string& json_text) {
  const json j = parse_text(json_text, "train config");
  reject_unknown(j, {"model", "train", "mask", "window", "median_window"}, "train config");
  TrainSpec s = j.get<TrainSpec>();
  if (s.median_window < 1 || s.median_window % 2 == 0)
    fail(ErrorKind::Config, "median_window must be odd and >= 1");
  s.mask.validate();
  s.train.validate();
  return s;
}

SynthConfig parse_synth_config(const std::string& json_text) {
  const json j = parse_text(json_text, "synth config");
  reject_unknown(j,
                 {"subjects", "channels", "sample_rate_hz", "class_names", "schedule",
                  "onset_ramp_timesteps", "noise_scale", "subject_jitter",
                  "min_template_distance", "window_len", "seed"},
                 "synth config");
  SynthConfig s = j.get<SynthConfig>();
  s.validate();
  return s;
}

void write_config_echo(const json& resolved, const std::string& out_path) {
  std::ofstream out(out_path);
  if (!out) fail(ErrorKind::Io, "cannot write config echo: " + out_path);
  out << resolved.dump(2) << "\n";
}

}  // namespace emgstream
