// Copyright (c) 2026 vbfusion authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace vbf {

/// Split-level accuracy report: per-question-type accuracy, their unweighted
/// mean (AA) and the plain fraction of correct answers (OA).
struct MetricsReport {
  std::map<std::string, double> per_type;
  std::map<std::string, int> counts;
  double aa = 0.0;
  double oa = 0.0;
  int total = 0;
};

/// Unweighted arithmetic mean of per-type accuracies.
inline double compute_aa(const std::vector<double>& per_type) {
  if (per_type.empty()) throw std::runtime_error("compute_aa: empty list");
  double s = 0.0;
  for (double v : per_type) s += v;
  return s / static_cast<double>(per_type.size());
}

/// Fraction of correct flags.
inline double compute_oa(const std::vector<bool>& correct) {
  if (correct.empty()) throw std::runtime_error("compute_oa: empty list");
  long hits = 0;
  for (bool c : correct) hits += c ? 1 : 0;
  return static_cast<double>(hits) / static_cast<double>(correct.size());
}

/// Builds a report from per-sample (type, correct) pairs.
inline MetricsReport build_report(const std::vector<std::string>& types,
                                  const std::vector<bool>& correct) {
  if (types.size() != correct.size())
    throw std::runtime_error("build_report: length mismatch");
  if (types.empty()) throw std::runtime_error("build_report: empty split");
  MetricsReport report;
  std::map<std::string, int> hits;
  for (size_t i = 0; i < types.size(); ++i) {
    ++report.counts[types[i]];
    if (correct[i]) ++hits[types[i]];
  }
  std::vector<double> per_type;
  for (const auto& [type, count] : report.counts) {
    double acc = static_cast<double>(hits[type]) / count;
    report.per_type[type] = acc;
    per_type.push_back(acc);
  }
  report.aa = compute_aa(per_type);
  report.oa = compute_oa(correct);
  report.total = static_cast<int>(types.size());
  return report;
}

inline nlohmann::json report_to_json(const MetricsReport& r) {
  return nlohmann::json{{"per_type", r.per_type},
                        {"counts", r.counts},
                        {"AA", r.aa},
                        {"OA", r.oa},
                        {"total", r.total}};
}

inline MetricsReport report_from_json(const nlohmann::json& j) {
  MetricsReport r;
  r.per_type = j.at("per_type").get<std::map<std::string, double>>();
  r.counts = j.at("counts").get<std::map<std::string, int>>();
  r.aa = j.at("AA").get<double>();
  r.oa = j.at("OA").get<double>();
  r.total = j.at("total").get<int>();
  return r;
}

}  // namespace vbf
