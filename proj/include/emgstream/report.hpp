#pragma once

#include <string>
#include <vector>

#include "emgstream/metrics.hpp"
#include "nlohmann/json.hpp"

namespace emgstream {

nlohmann::json report_to_json(const MetricsReport& rep);
MetricsReport report_from_json(const nlohmann::json& j);

void save_report(const MetricsReport& rep, const std::string& path);
MetricsReport load_report(const std::string& path);

std::string render_report_table(const MetricsReport& rep);

/// Mean +- SD across per-subject reports, grouped by look-ahead setting.
struct AggregateRow {
  int lookahead = 0;
  int subjects = 0;
  double raw_mean = 0, raw_sd = 0;
  double trans_mean = 0, trans_sd = 0;
  int trans_subjects = 0;  // reports with at least one scored transition
  double latency_mean_ms = 0, latency_median_ms = 0;
  int latency_subjects = 0;
};

std::vector<AggregateRow> aggregate_reports(const std::vector<MetricsReport>& reports);
nlohmann::json aggregate_to_json(const std::vector<AggregateRow>& rows);
std::string render_aggregate_table(const std::vector<AggregateRow>& rows);

}  // namespace emgstream
