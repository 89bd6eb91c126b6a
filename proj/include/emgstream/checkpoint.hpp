#pragma once

#include <string>
#include <vector>

#include "emgstream/masking.hpp"
#include "emgstream/model.hpp"
#include "emgstream/train.hpp"

namespace emgstream {

/// Self-describing model container: version tag, JSON header (hyper block,
/// class table, training/masking config echo, array directory), then raw
/// little-endian f64 arrays.
struct Checkpoint {
  ModelParams params;
  std::vector<std::string> class_names;
  int median_window = 3;
  WindowSpec window_spec;
  TrainConfig train_config;
  MaskConfig mask_config;
};

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

/// The checkpoint's JSON header (without the array payload), for inspection.
std::string checkpoint_info_json(const Checkpoint& ckpt);

}  // namespace emgstream
