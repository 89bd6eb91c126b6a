#include "emgstream/report.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

#include "emgstream/error.hpp"

namespace emgstream {

using nlohmann::json;

namespace {

TransitionVerdict verdict_from_name(const std::string& s) {
  if (s == "correct") return TransitionVerdict::Correct;
  if (s == "buffer_violation") return TransitionVerdict::BufferViolation;
  if (s == "maintenance_violation") return TransitionVerdict::MaintenanceViolation;
  if (s == "unscored") return TransitionVerdict::Unscored;
  fail(ErrorKind::Parse, "unknown verdict \"" + s + "\"");
}

}  // namespace

json report_to_json(const MetricsReport& rep) {
  json events = json::array();
  for (const auto& ev : rep.events) {
    json e{{"tau", ev.tau},
           {"y_old", ev.y_old},
           {"y_new", ev.y_new},
           {"buffer", {ev.buffer_begin, ev.buffer_end}},
           {"maintenance", {ev.maintenance_begin, ev.maintenance_end}},
           {"verdict", verdict_name(ev.verdict)}};
    if (ev.predicted_switch_time) e["predicted_switch_time"] = *ev.predicted_switch_time;
    events.push_back(std::move(e));
  }
  json per_class = json::array();
  for (const auto& pc : rep.per_class)
    per_class.push_back({{"name", pc.name}, {"total", pc.total}, {"correct", pc.correct}});

  json j{{"format", "emgstream-report-v1"},
         {"raw_compared", rep.raw_compared},
         {"scored_transitions", rep.scored_transitions},
         {"correct_transitions", rep.correct_transitions},
         {"events", std::move(events)},
         {"per_class", std::move(per_class)},
         {"config",
          {{"buffer_half_width", rep.buffer_half_width},
           {"lookahead", rep.lookahead},
           {"hold", rep.hold},
           {"inference_stride", rep.inference_stride},
           {"window_len", rep.window_len},
           {"sample_rate_hz", rep.sample_rate_hz}}},
         {"subject_id", rep.subject_id},
         {"session_id", rep.session_id}};
  if (rep.raw_accuracy) j["raw_accuracy"] = *rep.raw_accuracy;
  if (rep.transition_accuracy) j["transition_accuracy"] = *rep.transition_accuracy;
  if (rep.latency) {
    j["latency"] = {{"mean_ms", rep.latency->mean_ms},
                    {"median_ms", rep.latency->median_ms},
                    {"offsets_ms", rep.latency->offsets_ms}};
  }
  return j;
}

MetricsReport report_from_json(const json& j) {
  MetricsReport rep;
  try {
    if (j.at("format").get<std::string>() != "emgstream-report-v1")
      fail(ErrorKind::Parse, "unknown report format tag");
    rep.raw_compared = j.at("raw_compared").get<int64_t>();
    rep.scored_transitions = j.at("scored_transitions").get<int>();
    rep.correct_transitions = j.at("correct_transitions").get<int>();
    if (j.contains("raw_accuracy")) rep.raw_accuracy = j.at("raw_accuracy").get<double>();
    if (j.contains("transition_accuracy"))
      rep.transition_accuracy = j.at("transition_accuracy").get<double>();
    for (const auto& e : j.at("events")) {
      TransitionEvent ev;
      ev.tau = e.at("tau").get<int64_t>();
      ev.y_old = e.at("y_old").get<int>();
      ev.y_new = e.at("y_new").get<int>();
      ev.buffer_begin = e.at("buffer")[0].get<int64_t>();
      ev.buffer_end = e.at("buffer")[1].get<int64_t>();
      ev.maintenance_begin = e.at("maintenance")[0].get<int64_t>();
      ev.maintenance_end = e.at("maintenance")[1].get<int64_t>();
      ev.verdict = verdict_from_name(e.at("verdict").get<std::string>());
      if (e.contains("predicted_switch_time"))
        ev.predicted_switch_time = e.at("predicted_switch_time").get<int64_t>();
      rep.events.push_back(std::move(ev));
    }
    for (const auto& pc : j.at("per_class")) {
      PerClassAccuracy p;
      p.name = pc.at("name").get<std::string>();
      p.total = pc.at("total").get<int64_t>();
      p.correct = pc.at("correct").get<int64_t>();
      rep.per_class.push_back(std::move(p));
    }
    const auto& cfg = j.at("config");
    rep.buffer_half_width = cfg.at("buffer_half_width").get<int>();
    rep.lookahead = cfg.at("lookahead").get<int>();
    rep.hold = cfg.at("hold").get<int>();
    rep.inference_stride = cfg.at("inference_stride").get<int>();
    rep.window_len = cfg.at("window_len").get<int>();
    rep.sample_rate_hz = cfg.at("sample_rate_hz").get<int>();
    rep.subject_id = j.at("subject_id").get<std::string>();
    rep.session_id = j.at("session_id").get<std::string>();
    if (j.contains("latency")) {
      LatencyStats lat;
      lat.mean_ms = j.at("latency").at("mean_ms").get<double>();
      lat.median_ms = j.at("latency").at("median_ms").get<double>();
      lat.offsets_ms = j.at("latency").at("offsets_ms").get<std::vector<double>>();
      rep.latency = lat;
    }
  } catch (const json::exception& e) {
    fail(ErrorKind::Schema, std::string("report: ") + e.what());
  }
  return rep;
}

void save_report(const MetricsReport& rep, const std::string& path) {
  std::ofstream out(path);
  if (!out) fail(ErrorKind::Io, "cannot write report: " + path);
  out << report_to_json(rep).dump(2) << "\n";
}

MetricsReport load_report(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorKind::Io, "cannot open report: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    fail(ErrorKind::Parse, path + ": " + e.what());
  }
  return report_from_json(j);
}

std::string render_report_table(const MetricsReport& rep) {
  char buf[256];
  std::string out;
  out += "subject " + rep.subject_id + "/" + rep.session_id + "\n";
  std::snprintf(buf, sizeof(buf),
                "  lookahead=%d ts  hold=%d ts  buffer=+-%d ts  (f_s=%d Hz)\n", rep.lookahead,
                rep.hold, rep.buffer_half_width, rep.sample_rate_hz);
  out += buf;
  if (rep.raw_accuracy)
    std::snprintf(buf, sizeof(buf), "  raw accuracy        %.4f  (%lld timesteps)\n",
                  *rep.raw_accuracy, static_cast<long long>(rep.raw_compared));
  else
    std::snprintf(buf, sizeof(buf), "  raw accuracy        n/a (no defined timesteps)\n");
  out += buf;
  if (rep.transition_accuracy)
    std::snprintf(buf, sizeof(buf), "  transition accuracy %.4f  (%d/%d scored)\n",
                  *rep.transition_accuracy, rep.correct_transitions, rep.scored_transitions);
  else
    std::snprintf(buf, sizeof(buf), "  transition accuracy n/a (0 scored transitions)\n");
  out += buf;
  if (rep.latency)
    std::snprintf(buf, sizeof(buf), "  latency offset      mean %.1f ms, median %.1f ms (n=%zu)\n",
                  rep.latency->mean_ms, rep.latency->median_ms, rep.latency->offsets_ms.size());
  else
    std::snprintf(buf, sizeof(buf), "  latency offset      n/a\n");
  out += buf;
  for (const auto& pc : rep.per_class) {
    if (pc.total == 0) continue;
    std::snprintf(buf, sizeof(buf), "  class %-12s %.4f  (%lld/%lld)\n", pc.name.c_str(),
                  static_cast<double>(pc.correct) / static_cast<double>(pc.total),
                  static_cast<long long>(pc.correct), static_cast<long long>(pc.total));
    out += buf;
  }
  return out;
}

std::vector<AggregateRow> aggregate_reports(const std::vector<MetricsReport>& reports) {
  std::map<int, std::vector<const MetricsReport*>> groups;
  for (const auto& r : reports) groups[r.lookahead].push_back(&r);

  std::vector<AggregateRow> rows;
  for (const auto& [lookahead, group] : groups) {
    AggregateRow row;
    row.lookahead = lookahead;
    row.subjects = static_cast<int>(group.size());
    auto mean_sd = [](const std::vector<double>& v, double& mean, double& sd) {
      mean = 0;
      sd = 0;
      if (v.empty()) return;
      for (double x : v) mean += x;
      mean /= static_cast<double>(v.size());
      for (double x : v) sd += (x - mean) * (x - mean);
      sd = std::sqrt(sd / static_cast<double>(v.size()));
    };
    std::vector<double> raw, trans, lat_mean, lat_median;
    for (const auto* r : group) {
      if (r->raw_accuracy) raw.push_back(*r->raw_accuracy);
      if (r->transition_accuracy) trans.push_back(*r->transition_accuracy);
      if (r->latency) {
        lat_mean.push_back(r->latency->mean_ms);
        lat_median.push_back(r->latency->median_ms);
      }
    }
    mean_sd(raw, row.raw_mean, row.raw_sd);
    mean_sd(trans, row.trans_mean, row.trans_sd);
    row.trans_subjects = static_cast<int>(trans.size());
    double dummy;
    mean_sd(lat_mean, row.latency_mean_ms, dummy);
    mean_sd(lat_median, row.latency_median_ms, dummy);
    row.latency_subjects = static_cast<int>(lat_mean.size());
    rows.push_back(row);
  }
  return rows;
}

json aggregate_to_json(const std::vector<AggregateRow>& rows) {
  json out = json::array();
  for (const auto& r : rows) {
    out.push_back({{"lookahead", r.lookahead},
                   {"subjects", r.subjects},
                   {"raw_accuracy", {{"mean", r.raw_mean}, {"sd", r.raw_sd}}},
                   {"transition_accuracy",
                    {{"mean", r.trans_mean}, {"sd", r.trans_sd}, {"subjects", r.trans_subjects}}},
                   {"latency_ms",
                    {{"mean", r.latency_mean_ms},
                     {"median", r.latency_median_ms},
                     {"subjects", r.latency_subjects}}}});
  }
  return out;
}

std::string render_aggregate_table(const std::vector<AggregateRow>& rows) {
  std::string out;
  out += "lookahead   subjects   raw acc (mean+-sd)   trans acc (mean+-sd)   latency ms (avg/med)\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%6d ts   %8d   %.3f +- %.3f        %.3f +- %.3f          %.0f / %.0f\n",
                  r.lookahead, r.subjects, r.raw_mean, r.raw_sd, r.trans_mean, r.trans_sd,
                  r.latency_mean_ms, r.latency_median_ms);
    out += buf;
  }
  return out;
}

}  // namespace emgstream
