#pragma once

// Runs one experiment from a config and writes its outputs:
//   <id>.records.csv, <id>.summary.csv, <id>.summary.json, <id>.manifest.json
// plus best-time.selections.csv / informed-allocation.cohorts.csv where they
// apply. Each file is written under a .partial name and renamed once
// complete.

#include <array>
#include <filesystem>
#include <fstream>
#include <functional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Core>
#include <nlohmann/json.hpp>
#include <yaml-cpp/yaml.h>

#include "tresim/config.hpp"
#include "tresim/records.hpp"
#include "tresim/strategies.hpp"
#include "tresim/summary.hpp"
#include "tresim/tre.hpp"

namespace tresim {

inline constexpr std::string_view kVersion = "0.1.0";

inline constexpr std::array<std::string_view, 5> kExperimentIds = {
    "objective1-stochastic", "objective1-fixed", "delay", "best-time", "informed-allocation"};

inline bool is_experiment_id(std::string_view id) {
  for (auto k : kExperimentIds)
    if (k == id) return true;
  return false;
}

inline std::vector<std::string> default_group_keys(std::string_view id) {
  if (id == "objective1-stochastic") return {"schedule", "sigma_or_delta_h", "n_draws"};
  if (id == "objective1-fixed") return {"schedule", "arm", "sigma_or_delta_h", "during_infusion"};
  if (id == "delay") return {"schedule", "arm", "sigma_or_delta_h"};
  if (id == "best-time") return {"schedule", "arm", "sigma_or_delta_h"};
  if (id == "informed-allocation") return {"schedule", "arm", "sigma_or_delta_h"};
  throw std::invalid_argument("unknown experiment id '" + std::string(id) + "'");
}

/// Raised when an output file cannot be written.
class OutputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline void write_atomically(const std::filesystem::path& path,
                             const std::function<void(std::ostream&)>& body) {
  auto partial = path;
  partial += ".partial";
  {
    std::ofstream os(partial, std::ios::binary | std::ios::trunc);
    if (!os) throw OutputError("cannot open " + partial.string() + " for writing");
    body(os);
    os.flush();
    if (!os) throw OutputError("write failed for " + partial.string());
  }
  std::error_code ec;
  std::filesystem::rename(partial, path, ec);
  if (ec) throw OutputError("cannot rename " + partial.string() + ": " + ec.message());
}

inline std::string compiler_id() {
#if defined(__clang__)
  return "clang " __clang_version__;
#elif defined(__GNUC__)
  return "gcc " __VERSION__;
#else
  return "unknown";
#endif
}

}  // namespace detail

struct RunOutputs {
  ExperimentResult result;
  std::vector<CohortSummary> summary;
  std::vector<std::filesystem::path> files;
};

/// Runs experiment `id` and returns its raw result without touching disk.
inline ExperimentResult run_experiment_in_memory(const ExperimentConfig& cfg, std::string_view id,
                                                 std::vector<SelectionLogEntry>* selections = nullptr,
                                                 std::vector<CohortRecord>* cohorts = nullptr) {
  cfg.validate();
  const StudyContext ctx = cfg.context();
  const auto schedules = cfg.build_schedules();
  if (id == "objective1-stochastic") return run_objective1_stochastic(schedules, ctx, cfg.stochastic);
  if (id == "objective1-fixed") return run_objective1_fixed(schedules, ctx, cfg.fixed);
  if (id == "delay") return strategy_delay(schedules, ctx, cfg.delay);
  if (id == "best-time") {
    auto r = strategy_best_time(schedules, ctx, cfg.best_time);
    if (selections) *selections = std::move(r.selections);
    return std::move(r.result);
  }
  if (id == "informed-allocation") {
    auto r = strategy_informed_allocation(schedules, ctx, cfg.allocation);
    if (cohorts) *cohorts = std::move(r.cohorts);
    return std::move(r.result);
  }
  throw std::invalid_argument("unknown experiment id '" + std::string(id) + "'");
}

/// Runs experiment `id` and writes its outputs to cfg.output_dir. Output
/// bytes depend only on (config, seed) and the build.
inline RunOutputs run_experiment(const ExperimentConfig& cfg, std::string_view id) {
  if (!is_experiment_id(id)) throw std::invalid_argument("unknown experiment id '" + std::string(id) + "'");
  std::vector<SelectionLogEntry> selections;
  std::vector<CohortRecord> cohorts;
  RunOutputs out;
  out.result = run_experiment_in_memory(cfg, id, &selections, &cohorts);
  out.summary = summarize(out.result.records, default_group_keys(id), &out.result.warnings);

  std::error_code ec;
  std::filesystem::create_directories(cfg.output_dir, ec);
  if (ec) throw OutputError("cannot create " + cfg.output_dir.string() + ": " + ec.message());
  const std::string stem = std::string(id);
  auto emit = [&](const std::string& name, const std::function<void(std::ostream&)>& body) {
    const auto path = cfg.output_dir / name;
    detail::write_atomically(path, body);
    out.files.push_back(path);
  };

  emit(stem + ".records.csv", [&](std::ostream& os) { write_records_csv(os, out.result.records); });
  emit(stem + ".summary.csv", [&](std::ostream& os) { write_summary_csv(os, out.summary); });
  emit(stem + ".summary.json", [&](std::ostream& os) { os << summary_json(out.summary).dump(2) << '\n'; });
  if (id == "best-time")
    emit(stem + ".selections.csv", [&](std::ostream& os) { write_selection_log_csv(os, selections); });
  if (id == "informed-allocation")
    emit(stem + ".cohorts.csv", [&](std::ostream& os) { write_cohorts_csv(os, cohorts); });

  nlohmann::ordered_json m;
  m["experiment"] = std::string(id);
  m["seed"] = *cfg.seed;
  m["versions"] = {{"tresim", std::string(kVersion)},
                   {"compiler", detail::compiler_id()},
                   {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
                                 "." + std::to_string(EIGEN_MINOR_VERSION)},
                   {"yaml-cpp", "system"},
                   {"nlohmann_json", std::to_string(NLOHMANN_JSON_VERSION_MAJOR) + "." +
                                         std::to_string(NLOHMANN_JSON_VERSION_MINOR) + "." +
                                         std::to_string(NLOHMANN_JSON_VERSION_PATCH)}};
  m["config"] = config_json(cfg);
  m["counts"] = {{"records", out.result.records.size()},
                 {"excluded_fits", out.result.n_excluded_fits},
                 {"excluded_records", out.result.n_excluded_records},
                 {"summary_rows", out.summary.size()}};
  m["warnings"] = out.result.warnings;
  nlohmann::ordered_json files = nlohmann::ordered_json::array();
  for (const auto& f : out.files) files.push_back(f.filename().string());
  m["outputs"] = files;
  emit(stem + ".manifest.json", [&](std::ostream& os) { os << m.dump(2) << '\n'; });
  return out;
}

}  // namespace tresim
