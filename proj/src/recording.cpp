#include "emgstream/recording.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "emgstream/error.hpp"
#include "emgstream/log.hpp"
#include "nlohmann/json.hpp"

namespace emgstream {

namespace fs = std::filesystem;
using nlohmann::json;

void Recording::validate() const {
  if (samples.rows() != static_cast<Eigen::Index>(labels.size()))
    fail(ErrorKind::Schema, "recording: sample rows (" + std::to_string(samples.rows()) +
                                ") != label count (" + std::to_string(labels.size()) + ")");
  if (sample_rate_hz <= 0) fail(ErrorKind::Schema, "recording: sample_rate_hz must be positive");
  if (channels() < 1) fail(ErrorKind::Schema, "recording: needs at least one channel");
  const int k = num_classes();
  for (size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= k)
      fail(ErrorKind::Schema, "recording: label " + std::to_string(labels[i]) + " at row " +
                                  std::to_string(i) + " outside [0, " + std::to_string(k) + ")");
  }
}

int Manifest::class_index(const std::string& gesture) const {
  for (size_t i = 0; i < class_names.size(); ++i)
    if (class_names[i] == gesture) return static_cast<int>(i);
  fail(ErrorKind::Mapping, "gesture \"" + gesture + "\" not present in manifest class table");
}

std::string Manifest::resolve(const std::string& relative_path) const {
  fs::path p(relative_path);
  if (p.is_absolute() || base_dir.empty()) return relative_path;
  return (fs::path(base_dir) / p).string();
}

Manifest load_manifest(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open manifest: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(ErrorKind::Parse, "manifest " + path + ": " + e.what());
  }
  Manifest m;
  try {
    m.sample_rate_hz = j.at("sample_rate_hz").get<int>();
    m.channels = j.at("channels").get<int>();
    const auto& gestures = j.at("gestures");
    m.class_names.resize(gestures.size());
    std::vector<bool> seen(gestures.size(), false);
    for (auto it = gestures.begin(); it != gestures.end(); ++it) {
      const int idx = it.value().get<int>();
      if (idx < 0 || idx >= static_cast<int>(m.class_names.size()) || seen[idx])
        fail(ErrorKind::Schema, "manifest " + path + ": gesture indices must be a permutation of 0..K-1");
      m.class_names[idx] = it.key();
      seen[idx] = true;
    }
    for (const auto& f : j.at("files")) {
      ManifestFile mf;
      mf.path = f.at("path").get<std::string>();
      mf.subject_id = f.at("subject_id").get<std::string>();
      mf.session_id = f.value("session_id", std::string("0"));
      m.files.push_back(std::move(mf));
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::Schema, "manifest " + path + ": " + e.what());
  }
  if (m.sample_rate_hz <= 0 || m.channels < 1)
    fail(ErrorKind::Schema, "manifest " + path + ": sample_rate_hz and channels must be positive");
  m.base_dir = fs::path(path).parent_path().string();
  return m;
}

void save_manifest(const Manifest& m, const std::string& path) {
  json gestures = json::object();
  for (size_t i = 0; i < m.class_names.size(); ++i) gestures[m.class_names[i]] = i;
  json files = json::array();
  for (const auto& f : m.files)
    files.push_back({{"path", f.path}, {"subject_id", f.subject_id}, {"session_id", f.session_id}});
  json j{{"format_version", 1},
         {"sample_rate_hz", m.sample_rate_hz},
         {"channels", m.channels},
         {"gestures", gestures},
         {"files", files}};
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot write manifest: " + path);
  out << j.dump(2) << "\n";
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  fields.push_back(cur);
  return fields;
}

double parse_double(const std::string& s, const std::string& file, size_t line_no) {
  double v = 0;
  const char* b = s.data();
  const char* e = b + s.size();
  auto [ptr, ec] = std::from_chars(b, e, v);
  if (ec != std::errc() || ptr != e)
    fail(ErrorKind::Parse, file + ":" + std::to_string(line_no) + ": bad numeric field \"" + s + "\"");
  return v;
}

}  // namespace

Recording load_recording(const std::string& csv_path, const Manifest& manifest) {
  std::ifstream in(csv_path);
  if (!in) fail(ErrorKind::Io, "cannot open recording: " + csv_path);

  std::string line;
  size_t line_no = 0;
  if (!std::getline(in, line)) fail(ErrorKind::Parse, csv_path + ": empty file");
  ++line_no;
  const auto header = split_csv_line(line);
  const int c = manifest.channels;
  if (static_cast<int>(header.size()) != c + 2)
    fail(ErrorKind::Schema, csv_path + ": header has " + std::to_string(header.size()) +
                                " columns, expected " + std::to_string(c + 2) + " (t,ch0..ch" +
                                std::to_string(c - 1) + ",label)");
  if (header.front() != "t" || header.back() != "label")
    fail(ErrorKind::Schema, csv_path + ": header must be t,ch0..ch" + std::to_string(c - 1) + ",label");
  for (int i = 0; i < c; ++i)
    if (header[i + 1] != "ch" + std::to_string(i))
      fail(ErrorKind::Schema, csv_path + ": channel column " + std::to_string(i + 1) +
                                  " named \"" + header[i + 1] + "\", expected ch" + std::to_string(i));

  std::vector<double> values;
  std::vector<int> labels;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto fields = split_csv_line(line);
    if (static_cast<int>(fields.size()) != c + 2)
      fail(ErrorKind::Parse, csv_path + ":" + std::to_string(line_no) + ": expected " +
                                 std::to_string(c + 2) + " fields, got " + std::to_string(fields.size()));
    const double t = parse_double(fields[0], csv_path, line_no);
    if (static_cast<long long>(t) != static_cast<long long>(labels.size()))
      fail(ErrorKind::Parse, csv_path + ":" + std::to_string(line_no) + ": t column must equal the row index");
    for (int i = 0; i < c; ++i)
      values.push_back(parse_double(fields[i + 1], csv_path, line_no) / kAmplitudeScale);
    labels.push_back(manifest.class_index(fields.back()));
  }

  Recording rec;
  rec.sample_rate_hz = manifest.sample_rate_hz;
  rec.class_names = manifest.class_names;
  const auto rows = static_cast<Eigen::Index>(labels.size());
  rec.samples.resize(rows, c);
  for (Eigen::Index t = 0; t < rows; ++t)
    for (int i = 0; i < c; ++i) rec.samples(t, i) = values[static_cast<size_t>(t) * c + i];
  rec.labels = std::move(labels);

  // Attach ids when the manifest lists this file.
  const std::string fname = fs::path(csv_path).filename().string();
  for (const auto& f : manifest.files) {
    if (fs::path(f.path).filename().string() == fname) {
      rec.subject_id = f.subject_id;
      rec.session_id = f.session_id;
      break;
    }
  }
  rec.validate();
  return rec;
}

void save_recording(const Recording& rec, const std::string& csv_path) {
  std::ofstream out(csv_path);
  if (!out) fail(ErrorKind::Io, "cannot write recording: " + csv_path);
  const int c = rec.channels();
  out << "t";
  for (int i = 0; i < c; ++i) out << ",ch" << i;
  out << ",label\n";
  char buf[64];
  for (Eigen::Index t = 0; t < rec.length(); ++t) {
    out << t;
    for (int i = 0; i < c; ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", rec.samples(t, i) * kAmplitudeScale);
      out << ',' << buf;
    }
    out << ',' << rec.class_names.at(static_cast<size_t>(rec.labels[static_cast<size_t>(t)])) << "\n";
  }
}

Recording preprocess(const Recording& rec, int median_window) {
  if (median_window < 1 || median_window % 2 == 0)
    fail(ErrorKind::InvalidArg, "median_window must be odd and >= 1, got " + std::to_string(median_window));
  Recording out = rec;
  const Eigen::Index n = rec.length();
  const int c = rec.channels();
  const int half = median_window / 2;
  std::vector<double> buf;
  buf.reserve(static_cast<size_t>(median_window));
  for (int ch = 0; ch < c; ++ch) {
    for (Eigen::Index t = 0; t < n; ++t) {
      const Eigen::Index lo = std::max<Eigen::Index>(0, t - half);
      const Eigen::Index hi = std::min<Eigen::Index>(n - 1, t + half);
      buf.clear();
      for (Eigen::Index i = lo; i <= hi; ++i) buf.push_back(rec.samples(i, ch));
      std::sort(buf.begin(), buf.end());
      const size_t m = buf.size();
      const double med = (m % 2 == 1) ? buf[m / 2] : 0.5 * (buf[m / 2 - 1] + buf[m / 2]);
      out.samples(t, ch) = std::abs(med);
    }
  }
  return out;
}

WindowIndex window_starts(int64_t total_len, const WindowSpec& spec) {
  if (spec.window_len < 1 || spec.stride < 1)
    fail(ErrorKind::InvalidArg, "window_len and stride must both be >= 1");
  WindowIndex idx;
  if (total_len < spec.window_len) {
    idx.too_short = true;
    return idx;
  }
  const int64_t count = (total_len - spec.window_len) / spec.stride + 1;
  idx.starts.reserve(static_cast<size_t>(count));
  for (int64_t i = 0; i < count; ++i) idx.starts.push_back(i * spec.stride);
  return idx;
}

Window extract_window(const Recording& rec, int64_t start, int window_len) {
  if (start < 0 || start + window_len > rec.length())
    fail(ErrorKind::InvalidArg, "window [" + std::to_string(start) + ", " +
                                    std::to_string(start + window_len) + ") outside recording of length " +
                                    std::to_string(rec.length()));
  Window w;
  w.start = start;
  w.emg = rec.samples.middleRows(start, window_len);
  w.labels.assign(rec.labels.begin() + start, rec.labels.begin() + start + window_len);
  return w;
}

std::vector<Window> windows(const Recording& rec, const WindowSpec& spec) {
  const WindowIndex idx = window_starts(rec.length(), spec);
  if (idx.too_short)
    log_warn("recording " + rec.subject_id + "/" + rec.session_id + " shorter than one window (" +
             std::to_string(rec.length()) + " < " + std::to_string(spec.window_len) + "); skipped");
  std::vector<Window> out;
  out.reserve(idx.starts.size());
  for (int64_t s : idx.starts) out.push_back(extract_window(rec, s, spec.window_len));
  return out;
}

}  // namespace emgstream
