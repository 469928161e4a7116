#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "tresim/records.hpp"
#include "tresim/stats.hpp"

namespace tresim {

struct CohortSummary {
  std::vector<std::pair<std::string, std::string>> keys;
  std::string metric;  // bias | abs_bias | pct_abs_bias
  double mean = 0.0;
  double sd = 0.0;
  double median = 0.0;
  double q25 = 0.0;
  double q75 = 0.0;
  double p2_5 = 0.0;
  double p97_5 = 0.0;
  std::size_t n = 0;
  std::size_t n_excluded_zero_baseline = 0;
};

/// Value of a record column as text, for grouping.
inline std::string record_key(const BiasRecord& r, const std::string& column) {
  using detail::format_double;
  if (column == "experiment") return r.experiment;
  if (column == "schedule") return r.schedule;
  if (column == "arm") return r.arm;
  if (column == "cohort") return std::to_string(r.cohort);
  if (column == "patient") return std::to_string(r.patient_id);
  if (column == "draw_index") return std::to_string(r.draw_index);
  if (column == "n_draws") return std::to_string(r.n_draws_used);
  if (column == "sigma_or_delta_h") return format_double(r.sigma_or_delta);
  if (column == "anchor_time_h") return r.anchor_time ? format_double(*r.anchor_time) : "";
  if (column == "during_infusion") return r.during_infusion ? "1" : "0";
  throw std::invalid_argument("unknown grouping column '" + column + "'");
}

inline CohortSummary describe(std::vector<double> values) {
  if (values.empty()) throw std::invalid_argument("describe: empty sample");
  std::sort(values.begin(), values.end());
  CohortSummary s;
  s.n = values.size();
  s.mean = stats::mean(values);
  s.sd = stats::sd(values);
  s.median = stats::quantile_sorted(values, 0.5);
  s.q25 = stats::quantile_sorted(values, 0.25);
  s.q75 = stats::quantile_sorted(values, 0.75);
  s.p2_5 = stats::quantile_sorted(values, 0.025);
  s.p97_5 = stats::quantile_sorted(values, 0.975);
  return s;
}

/// Descriptive statistics of bias, absolute bias and percent absolute bias
/// per group. Percent statistics leave out records whose error-free
/// estimate is zero and report how many were left out. Groups come out in
/// key order and values are sorted before reduction, so the result does not
/// depend on record order. Empty groups are skipped with a warning.
inline std::vector<CohortSummary> summarize(const std::vector<BiasRecord>& records,
                                            const std::vector<std::string>& group_keys,
                                            std::vector<std::string>* warnings = nullptr) {
  struct Acc {
    std::vector<double> bias, abs_bias, pct;
    std::size_t zero_baseline = 0;
  };
  std::map<std::vector<std::string>, Acc> groups;
  for (const auto& r : records) {
    std::vector<std::string> key;
    key.reserve(group_keys.size());
    for (const auto& k : group_keys) key.push_back(record_key(r, k));
    auto& acc = groups[key];
    acc.bias.push_back(r.bias);
    acc.abs_bias.push_back(r.abs_bias);
    if (r.pct_abs_bias) acc.pct.push_back(*r.pct_abs_bias);
    else ++acc.zero_baseline;
  }

  std::vector<CohortSummary> out;
  for (auto& [key, acc] : groups) {
    std::vector<std::pair<std::string, std::string>> kv;
    for (std::size_t i = 0; i < key.size(); ++i) kv.emplace_back(group_keys[i], key[i]);
    for (auto [metric, values] : {std::pair{"bias", &acc.bias}, std::pair{"abs_bias", &acc.abs_bias},
                                  std::pair{"pct_abs_bias", &acc.pct}}) {
      if (values->empty()) {
        if (warnings) {
          std::string label;
          for (const auto& [k, v] : kv) label += k + "=" + v + " ";
          warnings->push_back("summary group " + label + "has no " + metric + " values; omitted");
        }
        continue;
      }
      CohortSummary s = describe(std::move(*values));
      s.keys = kv;
      s.metric = metric;
      if (std::string_view(metric) == "pct_abs_bias") s.n_excluded_zero_baseline = acc.zero_baseline;
      out.push_back(std::move(s));
    }
  }
  return out;
}

inline void write_summary_csv(std::ostream& os, const std::vector<CohortSummary>& rows) {
  using detail::format_double;
  if (rows.empty()) {
    os << "metric,mean,sd,median,q25,q75,p2_5,p97_5,n,n_excluded_zero_baseline\n";
    return;
  }
  for (const auto& [k, v] : rows.front().keys) os << k << ',';
  os << "metric,mean,sd,median,q25,q75,p2_5,p97_5,n,n_excluded_zero_baseline\n";
  for (const auto& s : rows) {
    for (const auto& [k, v] : s.keys) os << v << ',';
    os << s.metric << ',' << format_double(s.mean) << ',' << format_double(s.sd) << ','
       << format_double(s.median) << ',' << format_double(s.q25) << ',' << format_double(s.q75)
       << ',' << format_double(s.p2_5) << ',' << format_double(s.p97_5) << ',' << s.n << ','
       << s.n_excluded_zero_baseline << '\n';
  }
}

/// Groups nested as {"groups": [{"keys": {...}, "metrics": {name: stats}}]}.
inline nlohmann::ordered_json summary_json(const std::vector<CohortSummary>& rows) {
  nlohmann::ordered_json groups = nlohmann::ordered_json::array();
  for (const auto& s : rows) {
    nlohmann::ordered_json keys = nlohmann::ordered_json::object();
    for (const auto& [k, v] : s.keys) keys[k] = v;
    if (groups.empty() || groups.back()["keys"] != keys) {
      groups.push_back({{"keys", keys}, {"metrics", nlohmann::ordered_json::object()}});
    }
    groups.back()["metrics"][s.metric] = {
        {"mean", s.mean},     {"sd", s.sd},       {"median", s.median},
        {"iqr", {s.q25, s.q75}}, {"p2_5", s.p2_5}, {"p97_5", s.p97_5},
        {"n", s.n},           {"n_excluded_zero_baseline", s.n_excluded_zero_baseline}};
  }
  return {{"groups", groups}};
}

}  // namespace tresim
