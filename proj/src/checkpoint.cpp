#include "emgstream/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "emgstream/config.hpp"
#include "emgstream/error.hpp"

namespace emgstream {

using nlohmann::json;

namespace {
constexpr char kMagic[8] = {'E', 'M', 'G', 'S', 'C', 'K', 'P', '1'};
constexpr uint32_t kVersion = 1;
}  // namespace

namespace {

json header_json(const Checkpoint& ckpt) {
  // const_cast: param_views needs mutable access but we only read here.
  auto views = param_views(const_cast<Checkpoint&>(ckpt).params);
  json arrays = json::array();
  for (const auto& v : views) arrays.push_back({{"name", v.name}, {"size", v.size}});
  return json{{"format", "emgstream-checkpoint"},
              {"version", kVersion},
              {"hyper", ckpt.params.hyper},
              {"class_names", ckpt.class_names},
              {"median_window", ckpt.median_window},
              {"window_spec", ckpt.window_spec},
              {"train_config", ckpt.train_config},
              {"mask_config", ckpt.mask_config},
              {"arrays", arrays}};
}

}  // namespace

std::string checkpoint_info_json(const Checkpoint& ckpt) { return header_json(ckpt).dump(2); }

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::Io, "cannot write checkpoint: " + path);
  const std::string header = header_json(ckpt).dump();
  const uint64_t hlen = header.size();
  out.write(kMagic, sizeof(kMagic));
  out.write(reinterpret_cast<const char*>(&hlen), sizeof(hlen));
  out.write(header.data(), static_cast<std::streamsize>(hlen));
  for (const auto& v : param_views(const_cast<Checkpoint&>(ckpt).params))
    out.write(reinterpret_cast<const char*>(v.data),
              static_cast<std::streamsize>(v.size * static_cast<int64_t>(sizeof(double))));
  if (!out) fail(ErrorKind::Io, "short write to checkpoint: " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::Io, "cannot open checkpoint: " + path);
  char magic[8];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    fail(ErrorKind::Parse, path + ": not an emgstream checkpoint (bad magic)");
  uint64_t hlen = 0;
  in.read(reinterpret_cast<char*>(&hlen), sizeof(hlen));
  if (!in || hlen > (1ull << 30)) fail(ErrorKind::Parse, path + ": corrupt header length");
  std::string header(hlen, '\0');
  in.read(header.data(), static_cast<std::streamsize>(hlen));
  if (!in) fail(ErrorKind::Parse, path + ": truncated header");

  json j;
  try {
    j = json::parse(header);
  } catch (const json::exception& e) {
    fail(ErrorKind::Parse, path + ": header: " + e.what());
  }

  Checkpoint ckpt;
  try {
    if (j.at("version").get<uint32_t>() != kVersion)
      fail(ErrorKind::Parse, path + ": unsupported checkpoint version");
    const ModelHyper hyper = j.at("hyper").get<ModelHyper>();
    ckpt.params = ModelParams::init(hyper, 0);
    ckpt.class_names = j.at("class_names").get<std::vector<std::string>>();
    ckpt.median_window = j.at("median_window").get<int>();
    ckpt.window_spec = j.at("window_spec").get<WindowSpec>();
    ckpt.train_config = j.at("train_config").get<TrainConfig>();
    ckpt.mask_config = j.at("mask_config").get<MaskConfig>();

    const auto& arrays = j.at("arrays");
    auto views = param_views(ckpt.params);
    if (arrays.size() != views.size())
      fail(ErrorKind::Parse, path + ": array directory does not match this model layout");
    for (size_t i = 0; i < views.size(); ++i) {
      if (arrays[i].at("name").get<std::string>() != views[i].name ||
          arrays[i].at("size").get<int64_t>() != views[i].size)
        fail(ErrorKind::Parse, path + ": array \"" + views[i].name + "\" mismatch");
      in.read(reinterpret_cast<char*>(views[i].data),
              static_cast<std::streamsize>(views[i].size * static_cast<int64_t>(sizeof(double))));
      if (!in) fail(ErrorKind::Parse, path + ": truncated array payload");
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::Schema, path + ": header: " + e.what());
  }
  if (static_cast<int>(ckpt.class_names.size()) != ckpt.params.hyper.num_classes)
    fail(ErrorKind::Schema, path + ": class table size != num_classes");
  return ckpt;
}

}  // namespace emgstream
