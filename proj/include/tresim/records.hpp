#pragma once

// Per-patient bias records and their delimiter-separated text form.

#include <array>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

namespace tresim {

struct BiasRecord {
  std::string experiment;
  std::string schedule;
  std::string arm;               // error model, policy or allocation criterion
  std::size_t cohort = 0;        // 1-based; 0 when not part of a cohort design
  std::size_t patient_id = 0;
  std::size_t draw_index = 0;    // dose window of a draw evaluated alone; 0 otherwise
  std::size_t n_draws_used = 0;
  double sigma_or_delta = 0.0;   // sigma_RE or delta_f, hours
  std::optional<double> anchor_time;
  bool during_infusion = false;  // latest draw used was taken while infusing
  double truth_estimate = 0.0;   // h(theta_hat) from error-free times
  double bias = 0.0;             // mean signed deviation over replicates
  double abs_bias = 0.0;         // mean absolute deviation over replicates
  std::optional<double> pct_abs_bias;  // 100 * abs_bias / truth; unset when truth == 0
  std::size_t n_replicates = 0;  // replicates that entered the means
  std::size_t n_excluded = 0;    // replicates dropped for non-convergence

  bool operator==(const BiasRecord&) const = default;
};

/// Record from the signed per-replicate deviations h* - h.
inline void fill_bias(BiasRecord& r, double truth, const std::vector<double>& deviations) {
  r.truth_estimate = truth;
  r.n_replicates = deviations.size();
  if (deviations.empty()) {
    r.bias = r.abs_bias = std::nan("");
    r.pct_abs_bias.reset();
    return;
  }
  double s = 0.0, a = 0.0;
  for (double d : deviations) {
    s += d;
    a += std::abs(d);
  }
  r.bias = s / static_cast<double>(deviations.size());
  r.abs_bias = a / static_cast<double>(deviations.size());
  if (truth != 0.0) r.pct_abs_bias = 100.0 * r.abs_bias / truth;
  else r.pct_abs_bias.reset();
}

inline constexpr std::array<std::string_view, 16> kRecordColumns = {
    "experiment", "schedule",    "arm",      "cohort",       "patient",
    "draw_index", "n_draws",     "sigma_or_delta_h", "anchor_time_h", "during_infusion",
    "truth_ft",   "bias",        "abs_bias", "pct_abs_bias", "n_replicates",
    "n_excluded"};

namespace detail {

inline std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  std::array<char, 64> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  if (ec != std::errc{}) throw std::runtime_error("format_double failed");
  return std::string(buf.data(), ptr);
}

inline double parse_double(std::string_view s) {
  if (s == "nan") return std::nan("");
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw std::invalid_argument("not a number: '" + std::string(s) + "'");
  return v;
}

inline std::size_t parse_size(std::string_view s) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw std::invalid_argument("not a count: '" + std::string(s) + "'");
  return v;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  std::size_t pos = 0;
  while (true) {
    const auto next = line.find(sep, pos);
    out.push_back(line.substr(pos, next == std::string_view::npos ? std::string_view::npos : next - pos));
    if (next == std::string_view::npos) break;
    pos = next + 1;
  }
  return out;
}

}  // namespace detail

inline void write_records_csv(std::ostream& os, const std::vector<BiasRecord>& records) {
  for (std::size_t i = 0; i < kRecordColumns.size(); ++i)
    os << (i ? "," : "") << kRecordColumns[i];
  os << '\n';
  using detail::format_double;
  for (const auto& r : records) {
    os << r.experiment << ',' << r.schedule << ',' << r.arm << ',' << r.cohort << ','
       << r.patient_id << ',' << r.draw_index << ',' << r.n_draws_used << ','
       << format_double(r.sigma_or_delta) << ','
       << (r.anchor_time ? format_double(*r.anchor_time) : "") << ','
       << (r.during_infusion ? 1 : 0) << ',' << format_double(r.truth_estimate) << ','
       << format_double(r.bias) << ',' << format_double(r.abs_bias) << ','
       << (r.pct_abs_bias ? format_double(*r.pct_abs_bias) : "") << ',' << r.n_replicates << ','
       << r.n_excluded << '\n';
  }
}

inline std::vector<BiasRecord> read_records_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::invalid_argument("record table: missing header");
  const auto header = detail::split(line, ',');
  if (header.size() != kRecordColumns.size())
    throw std::invalid_argument("record table: unexpected header");
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] != kRecordColumns[i]) throw std::invalid_argument("record table: unexpected header");

  std::vector<BiasRecord> out;
  std::size_t lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    const auto f = detail::split(line, ',');
    if (f.size() != kRecordColumns.size())
      throw std::invalid_argument("record table: wrong field count on line " + std::to_string(lineno));
    BiasRecord r;
    r.experiment = f[0];
    r.schedule = f[1];
    r.arm = f[2];
    r.cohort = detail::parse_size(f[3]);
    r.patient_id = detail::parse_size(f[4]);
    r.draw_index = detail::parse_size(f[5]);
    r.n_draws_used = detail::parse_size(f[6]);
    r.sigma_or_delta = detail::parse_double(f[7]);
    if (!f[8].empty()) r.anchor_time = detail::parse_double(f[8]);
    r.during_infusion = f[9] == "1";
    r.truth_estimate = detail::parse_double(f[10]);
    r.bias = detail::parse_double(f[11]);
    r.abs_bias = detail::parse_double(f[12]);
    if (!f[13].empty()) r.pct_abs_bias = detail::parse_double(f[13]);
    r.n_replicates = detail::parse_size(f[14]);
    r.n_excluded = detail::parse_size(f[15]);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace tresim
