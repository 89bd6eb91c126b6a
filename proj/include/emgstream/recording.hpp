#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <string>
#include <vector>

namespace emgstream {

/// Myo-style raw units are signed 8-bit; on-disk amplitudes are divided by
/// this at load (and multiplied back on save) so in-memory samples lie in
/// [-1, 1]. Power-of-two scale keeps the round trip bit-exact.
inline constexpr double kAmplitudeScale = 128.0;

/// A labeled multichannel EMG time series; the unit of ingestion.
struct Recording {
  std::string subject_id;
  std::string session_id;
  int sample_rate_hz = 200;
  Eigen::MatrixXd samples;               // T_total x C
  std::vector<int> labels;               // length T_total, values in [0, K)
  std::vector<std::string> class_names;  // index -> gesture name

  Eigen::Index length() const { return samples.rows(); }
  int channels() const { return static_cast<int>(samples.cols()); }
  int num_classes() const { return static_cast<int>(class_names.size()); }

  /// Throws Error(Schema) when an invariant is violated.
  void validate() const;
};

struct ManifestFile {
  std::string path;  // relative to the manifest's directory
  std::string subject_id;
  std::string session_id;
};

/// Dataset manifest: gesture-name table plus the file list.
struct Manifest {
  int sample_rate_hz = 200;
  int channels = 8;
  std::vector<std::string> class_names;
  std::vector<ManifestFile> files;
  std::string base_dir;  // directory of the manifest file, set on load

  int num_classes() const { return static_cast<int>(class_names.size()); }
  /// Throws Error(Mapping) naming the gesture when it is not in the table.
  int class_index(const std::string& gesture) const;
  std::string resolve(const std::string& relative_path) const;
};

Manifest load_manifest(const std::string& path);
void save_manifest(const Manifest& m, const std::string& path);

Recording load_recording(const std::string& csv_path, const Manifest& manifest);
void save_recording(const Recording& rec, const std::string& csv_path);

/// Sliding median of width median_window per channel (edge windows shrink to
/// the available neighborhood), then full-wave rectification. Labels pass
/// through unchanged. median_window must be odd.
Recording preprocess(const Recording& rec, int median_window);

struct WindowSpec {
  int window_len = 600;
  int stride = 30;
};

struct Window {
  int64_t start = 0;
  Eigen::MatrixXd emg;      // T x C
  std::vector<int> labels;  // length T
};

struct WindowIndex {
  std::vector<int64_t> starts;
  bool too_short = false;  // recording shorter than one window
};

/// Window start offsets 0, stride, 2*stride, ...; never past the end.
WindowIndex window_starts(int64_t total_len, const WindowSpec& spec);

Window extract_window(const Recording& rec, int64_t start, int window_len);

std::vector<Window> windows(const Recording& rec, const WindowSpec& spec);

}  // namespace emgstream
