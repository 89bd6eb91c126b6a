#pragma once

#include <string>

#include "emgstream/masking.hpp"
#include "emgstream/metrics.hpp"
#include "emgstream/model.hpp"
#include "emgstream/recording.hpp"
#include "emgstream/stream.hpp"
#include "emgstream/synth.hpp"
#include "emgstream/train.hpp"
#include "nlohmann/json.hpp"

namespace emgstream {

void to_json(nlohmann::json& j, const WindowSpec& w);
void from_json(const nlohmann::json& j, WindowSpec& w);
void to_json(nlohmann::json& j, const ModelHyper& h);
void from_json(const nlohmann::json& j, ModelHyper& h);
void to_json(nlohmann::json& j, const MaskConfig& m);
void from_json(const nlohmann::json& j, MaskConfig& m);
void to_json(nlohmann::json& j, const TrainConfig& t);
void from_json(const nlohmann::json& j, TrainConfig& t);
void to_json(nlohmann::json& j, const StreamConfig& s);
void from_json(const nlohmann::json& j, StreamConfig& s);
void to_json(nlohmann::json& j, const SynthConfig& s);
void from_json(const nlohmann::json& j, SynthConfig& s);
void to_json(nlohmann::json& j, const MetricsConfig& m);
void from_json(const nlohmann::json& j, MetricsConfig& m);

/// Complete configuration of one training run; every field of the config
/// file is optional and falls back to the defaults above.
struct TrainSpec {
  ModelHyper hyper;
  TrainConfig train;
  MaskConfig mask;
  WindowSpec window;
  int median_window = 3;
};

void to_json(nlohmann::json& j, const TrainSpec& s);
void from_json(const nlohmann::json& j, TrainSpec& s);

/// Parses JSON text; unknown keys are rejected at the top level so typos do
/// not silently fall back to defaults. Throws Error(Config | Parse).
TrainSpec parse_train_spec(const std::string& json_text);
SynthConfig parse_synth_config(const std::string& json_text);

/// Writes the resolved configuration (plus format versions) next to an
/// output artifact so the producing command can be re-run bit-identically.
void write_config_echo(const nlohmann::json& resolved, const std::string& out_path);

}  // namespace emgstream
