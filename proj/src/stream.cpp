#include "emgstream/stream.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "emgstream/error.hpp"

namespace emgstream {

using Eigen::MatrixXd;
using Eigen::VectorXd;

void StreamConfig::validate() const {
  if (window_len < 1) fail(ErrorKind::Config, "stream window_len must be >= 1");
  if (lookahead < 0) fail(ErrorKind::Config, "stream lookahead must be >= 0");
  if (hold < 1) fail(ErrorKind::Config, "stream hold must be >= 1");
  if (inference_stride < 1) fail(ErrorKind::Config, "stream inference_stride must be >= 1");
  if (sample_rate_hz < 1) fail(ErrorKind::Config, "stream sample_rate_hz must be >= 1");
}

int aggregate_argmax(const std::vector<VectorXd>& logit_rows, VectorXd* avg_out) {
  if (logit_rows.empty()) fail(ErrorKind::InvalidArg, "aggregate_argmax: no logit rows");
  VectorXd avg = VectorXd::Zero(logit_rows.front().size());
  for (const auto& r : logit_rows) {
    if (r.size() != avg.size()) fail(ErrorKind::Shape, "aggregate_argmax: inconsistent logit sizes");
    avg += r;
  }
  avg /= static_cast<double>(logit_rows.size());
  int best = 0;
  for (int i = 1; i < avg.size(); ++i)
    if (avg(i) > avg(best)) best = i;  // ties keep the lowest index
  if (avg_out) *avg_out = avg;
  return best;
}

namespace {

struct WindowEval {
  MatrixXd logits;      // T x K
  int64_t max_read = -1;  // instrumented: highest sample row copied out
};

/// All sample access goes through this copy loop so the causality audit
/// reflects actual reads.
WindowEval eval_window_ending_at(const Recording& rec, int64_t end, int window_len,
                                 const WindowPredictor& model) {
  const int64_t start = end - window_len + 1;
  WindowEval we;
  MatrixXd win(window_len, rec.channels());
  for (int64_t i = 0; i < window_len; ++i) {
    win.row(i) = rec.samples.row(start + i);
    we.max_read = std::max(we.max_read, start + i);
  }
  we.logits = model(win);
  if (we.logits.rows() != window_len)
    fail(ErrorKind::Shape, "window predictor returned " + std::to_string(we.logits.rows()) +
                               " rows for a window of length " + std::to_string(window_len));
  return we;
}

DecisionRecord decide_with_cache(int64_t t, const Recording& rec, const WindowPredictor& model,
                                 int num_classes, const StreamConfig& cfg,
                                 std::map<int64_t, WindowEval>* cache) {
  const auto t0 = std::chrono::steady_clock::now();
  DecisionRecord dec;
  dec.t = t;
  if (t < cfg.window_len - 1) {  // warmup: no full window ends at or before t
    dec.label = kUndefinedLabel;
    return dec;
  }
  const int64_t last = rec.length() - 1;
  const int64_t horizon = std::min<int64_t>(t + cfg.lookahead, last);

  std::vector<VectorXd> rows;
  for (int64_t end = t; end <= horizon; end += cfg.inference_stride) {
    const WindowEval* we = nullptr;
    if (cache) {
      auto it = cache->find(end);
      if (it == cache->end())
        it = cache->emplace(end, eval_window_ending_at(rec, end, cfg.window_len, model)).first;
      we = &it->second;
    } else {
      static thread_local WindowEval local;
      local = eval_window_ending_at(rec, end, cfg.window_len, model);
      we = &local;
    }
    const int64_t row_in_window = t - (end - cfg.window_len + 1);
    rows.push_back(we->logits.row(row_in_window).transpose());
    dec.max_sample_read = std::max(dec.max_sample_read, we->max_read);
    ++dec.windows_used;
  }
  dec.label = aggregate_argmax(rows, &dec.logits);
  if (static_cast<int>(dec.logits.size()) != num_classes)
    fail(ErrorKind::Shape, "predictor class count " + std::to_string(dec.logits.size()) +
                               " != expected " + std::to_string(num_classes));
  dec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0)
                    .count();
  return dec;
}

}  // namespace

DecisionRecord decide(int64_t t, const Recording& rec, const WindowPredictor& model,
                      int num_classes, const StreamConfig& cfg) {
  cfg.validate();
  return decide_with_cache(t, rec, model, num_classes, cfg, nullptr);
}

PredictionStream run_stream(const Recording& rec, const WindowPredictor& model, int num_classes,
                            const StreamConfig& cfg) {
  cfg.validate();
  PredictionStream out;
  out.config = cfg;
  out.num_classes = num_classes;
  out.warmup_end = cfg.window_len - 1;
  out.labels.assign(static_cast<size_t>(rec.length()), kUndefinedLabel);

  std::map<int64_t, WindowEval> cache;
  for (int64_t t = out.warmup_end; t < rec.length(); t += cfg.hold) {
    DecisionRecord dec = decide_with_cache(t, rec, model, num_classes, cfg, &cache);
    const int64_t fill_end = std::min<int64_t>(rec.length(), t + cfg.hold);
    for (int64_t u = t; u < fill_end; ++u) out.labels[static_cast<size_t>(u)] = dec.label;
    out.decisions.push_back(std::move(dec));
    // Later decisions only consult window ends at or after their own t.
    cache.erase(cache.begin(), cache.lower_bound(t + cfg.hold));
  }
  return out;
}

void save_prediction(const PredictionStream& pred, const std::string& path, bool with_logits) {
  std::ofstream outf(path);
  if (!outf) fail(ErrorKind::Io, "cannot write prediction file: " + path);
  outf << "# emgstream-prediction-v1\n";
  outf << "# window_len=" << pred.config.window_len << "\n";
  outf << "# lookahead=" << pred.config.lookahead << "\n";
  outf << "# hold=" << pred.config.hold << "\n";
  outf << "# inference_stride=" << pred.config.inference_stride << "\n";
  outf << "# sample_rate_hz=" << pred.config.sample_rate_hz << "\n";
  outf << "# num_classes=" << pred.num_classes << "\n";
  outf << "# warmup_end=" << pred.warmup_end << "\n";
  outf << "t,label";
  if (with_logits)
    for (int k = 0; k < pred.num_classes; ++k) outf << ",logit" << k;
  outf << "\n";

  // Map each timestep to its governing decision for the logit columns.
  std::vector<int> dec_of_t;
  if (with_logits) {
    dec_of_t.assign(pred.labels.size(), -1);
    for (size_t d = 0; d < pred.decisions.size(); ++d) {
      const int64_t t = pred.decisions[d].t;
      for (int64_t u = t; u < std::min<int64_t>(static_cast<int64_t>(pred.labels.size()),
                                                t + pred.config.hold);
           ++u)
        dec_of_t[static_cast<size_t>(u)] = static_cast<int>(d);
    }
  }
  char buf[64];
  for (size_t t = 0; t < pred.labels.size(); ++t) {
    outf << t << ',' << pred.labels[t];
    if (with_logits) {
      const int d = dec_of_t[t];
      for (int k = 0; k < pred.num_classes; ++k) {
        if (d < 0) {
          outf << ",nan";
        } else {
          std::snprintf(buf, sizeof(buf), "%.17g", pred.decisions[static_cast<size_t>(d)].logits(k));
          outf << ',' << buf;
        }
      }
    }
    outf << "\n";
  }
}

PredictionStream load_prediction(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open prediction file: " + path);
  PredictionStream pred;
  std::string line;
  size_t line_no = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') {
      const auto eq = line.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = line.substr(2, eq - 2);
      const long long value = std::atoll(line.c_str() + eq + 1);
      if (key == "window_len") pred.config.window_len = static_cast<int>(value);
      else if (key == "lookahead") pred.config.lookahead = static_cast<int>(value);
      else if (key == "hold") pred.config.hold = static_cast<int>(value);
      else if (key == "inference_stride") pred.config.inference_stride = static_cast<int>(value);
      else if (key == "sample_rate_hz") pred.config.sample_rate_hz = static_cast<int>(value);
      else if (key == "num_classes") pred.num_classes = static_cast<int>(value);
      else if (key == "warmup_end") pred.warmup_end = value;
      continue;
    }
    if (!header_seen) {  // column header row
      header_seen = true;
      continue;
    }
    const char* p = line.c_str();
    char* endp = nullptr;
    const long long t = std::strtoll(p, &endp, 10);
    if (endp == p || *endp != ',')
      fail(ErrorKind::Parse, path + ":" + std::to_string(line_no) + ": bad row");
    const long long label = std::strtoll(endp + 1, nullptr, 10);
    if (t != static_cast<long long>(pred.labels.size()))
      fail(ErrorKind::Parse, path + ":" + std::to_string(line_no) + ": t must equal the row index");
    pred.labels.push_back(static_cast<int>(label));
  }
  if (!header_seen) fail(ErrorKind::Parse, path + ": missing column header");
  return pred;
}

}  // namespace emgstream
