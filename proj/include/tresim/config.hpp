#pragma once

// Experiment configuration: YAML in, ExperimentConfig out. Durations are
// hours unless written with a `min` suffix ("15min"); an `h` suffix is also
// accepted.

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>
#include <yaml-cpp/yaml.h>

#include "tresim/strategies.hpp"
#include "tresim/tre.hpp"

namespace tresim {

/// Raised for malformed or inconsistent configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Scale { desk, paper };

inline Scale parse_scale(std::string_view s) {
  if (s == "desk") return Scale::desk;
  if (s == "paper") return Scale::paper;
  throw ConfigError("scale must be 'desk' or 'paper', got '" + std::string(s) + "'");
}

inline const char* to_string(Scale s) { return s == Scale::desk ? "desk" : "paper"; }

struct ScheduleSpec {
  std::string name;
  double infusion_duration = 0.5;
  int n_doses = 5;
  double interval = 8.0;
  double amount_g = 3.0;
  std::vector<double> anchors;

  Schedule build() const {
    return {name, standard_regimen(infusion_duration, n_doses, interval, amount_g), anchors};
  }
};

struct ExperimentConfig {
  Scale scale = Scale::desk;
  std::optional<std::uint64_t> seed;
  std::filesystem::path output_dir = "out";
  unsigned threads = 1;
  PriorHyperparams prior = PriorHyperparams::placeholder();
  PdConfig pd{};
  std::vector<ScheduleSpec> schedules;
  StochasticOptions stochastic;
  FixedOptions fixed;
  DelayOptions delay;
  BestTimeOptions best_time;
  AllocationOptions allocation;

  static ExperimentConfig defaults(Scale scale) {
    ExperimentConfig c;
    c.scale = scale;
    c.schedules = {{"short", 0.5, 5, 8.0, 3.0, {24.0, 24.25, 24.5, 25.0, 25.5, 26.5, 31.75}},
                   {"long", 4.0, 5, 8.0, 3.0, {24.0, 26.0, 28.0, 28.5, 29.0, 30.0, 31.75}}};
    if (scale == Scale::paper) {
      c.stochastic.n_patients = 1000;
      c.stochastic.replicates = 1000;
      c.fixed.n_patients = 1000;
      c.delay.n_patients = 1000;
      c.delay.replicates = 1000;
      c.best_time.n_patients = 1000;
      c.best_time.final_replicates = 1000;
      c.allocation.n_cohorts = 100;
      c.allocation.cohort_size = 100;
      c.allocation.n_second_draws = 50;
      c.allocation.final_replicates = 1000;
    }
    return c;
  }

  std::vector<Schedule> build_schedules() const {
    std::vector<Schedule> out;
    for (const auto& s : schedules) out.push_back(s.build());
    return out;
  }

  StudyContext context() const {
    if (!seed) throw ConfigError("no seed given (set `seed` in the config or pass --seed)");
    return {prior, pd, *seed, threads};
  }

  void validate() const {
    auto need = [](bool ok, const std::string& what) {
      if (!ok) throw ConfigError(what);
    };
    need(seed.has_value(), "no seed given (set `seed` in the config or pass --seed)");
    try {
      prior.validate();
      pd.validate();
      for (const auto& s : schedules) (void)s.build();
    } catch (const std::invalid_argument& e) {
      throw ConfigError(e.what());
    }
    need(!schedules.empty(), "no schedules configured");
    need(!stochastic.sigma_re.empty(), "objective1_stochastic.sigma_re is empty");
    need(!fixed.delta_f.empty(), "objective1_fixed.delta_f is empty");
    need(!delay.sigma_re.empty() && !delay.delays.empty(), "delay grids must be non-empty");
    need(!best_time.sigma_re.empty() && !best_time.grids.empty(), "best_time grids must be non-empty");
    need(!allocation.sigma_re.empty() && !allocation.criteria.empty(),
         "informed_allocation grids must be non-empty");
    need(allocation.n_second_draws <= allocation.cohort_size,
         "informed_allocation.n_second_draws exceeds cohort_size");
    for (double s : stochastic.sigma_re) need(s >= 0.0, "sigma_re values must be >= 0");
    for (const auto& s : schedules)
      for (double a : s.anchors) need(a >= 0.0, "anchor times must be >= 0");
  }
};

namespace detail {

/// "15min" -> 0.25, "1.5h" -> 1.5, 2 -> 2.
inline double parse_duration(const YAML::Node& node, const std::string& where) {
  const std::string text = node.as<std::string>();
  std::string_view s = text;
  double scale = 1.0;
  if (s.size() > 3 && s.substr(s.size() - 3) == "min") {
    scale = 1.0 / 60.0;
    s.remove_suffix(3);
  } else if (s.size() > 1 && s.back() == 'h') {
    s.remove_suffix(1);
  }
  while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
  try {
    return parse_double(s) * scale;
  } catch (const std::invalid_argument&) {
    throw ConfigError(where + ": cannot read duration '" + text + "'");
  }
}

inline std::vector<double> parse_durations(const YAML::Node& node, const std::string& where) {
  if (!node.IsSequence()) throw ConfigError(where + ": expected a list");
  std::vector<double> out;
  for (const auto& n : node) out.push_back(parse_duration(n, where));
  return out;
}

template <class T>
void read(const YAML::Node& parent, const char* key, T& dst, const std::string& where) {
  if (const auto n = parent[key]) {
    try {
      dst = n.as<T>();
    } catch (const YAML::Exception&) {
      throw ConfigError(where + "." + key + ": wrong type");
    }
  }
}

inline void read_duration(const YAML::Node& parent, const char* key, double& dst,
                          const std::string& where) {
  if (const auto n = parent[key]) dst = parse_duration(n, where + "." + key);
}

inline void read_durations(const YAML::Node& parent, const char* key, std::vector<double>& dst,
                           const std::string& where) {
  if (const auto n = parent[key]) dst = parse_durations(n, where + "." + key);
}

/// A [lo, hi] pair of durations.
inline void read_window(const YAML::Node& parent, const char* key, double& lo, double& hi,
                        const std::string& where) {
  const auto n = parent[key];
  if (!n) return;
  const auto v = parse_durations(n, where + "." + key);
  if (v.size() != 2 || !(v[0] <= v[1])) throw ConfigError(where + "." + key + ": expected [lo, hi] with lo <= hi");
  lo = v[0];
  hi = v[1];
}

/// Each grid is either an explicit list of times or {from, to, step}.
inline std::vector<CandidateGrid> parse_grids(const YAML::Node& node, const std::string& where) {
  if (!node.IsSequence() || node.size() == 0) throw ConfigError(where + ": expected a non-empty list");
  std::vector<CandidateGrid> out;
  for (const auto& g : node) {
    if (g.IsSequence()) {
      CandidateGrid grid{parse_durations(g, where)};
      if (grid.times.empty()) throw ConfigError(where + ": empty grid");
      out.push_back(std::move(grid));
    } else if (g.IsMap() && g["from"] && g["to"]) {
      const double from = parse_duration(g["from"], where + ".from");
      const double to = parse_duration(g["to"], where + ".to");
      const double step = g["step"] ? parse_duration(g["step"], where + ".step") : 0.5;
      try {
        out.push_back(CandidateGrid::span(from, to, step));
      } catch (const std::invalid_argument& e) {
        throw ConfigError(where + ": " + e.what());
      }
    } else {
      throw ConfigError(where + ": each grid is a list of times or {from, to, step}");
    }
  }
  return out;
}

inline AllocationCriterion parse_criterion(const std::string& s) {
  if (s == "random") return AllocationCriterion::random;
  if (s == "ci-width") return AllocationCriterion::ci_width;
  if (s == "quadrature-variance") return AllocationCriterion::quadrature_variance;
  throw ConfigError("unknown allocation criterion '" + s + "'");
}

}  // namespace detail

/// Parses YAML text on top of the defaults for the chosen scale. A
/// `scale_override` (from the command line) wins over the file's `scale`.
inline ExperimentConfig parse_config(const std::string& yaml_text,
                                     std::optional<Scale> scale_override = std::nullopt) {
  using namespace detail;
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(std::string("config is not valid YAML: ") + e.what());
  }
  if (!root.IsNull() && !root.IsMap()) throw ConfigError("config must be a mapping");

  Scale scale = Scale::desk;
  if (root["scale"]) scale = parse_scale(root["scale"].as<std::string>());
  if (scale_override) scale = *scale_override;
  ExperimentConfig c = ExperimentConfig::defaults(scale);

  if (root["seed"]) {
    try {
      c.seed = root["seed"].as<std::uint64_t>();
    } catch (const YAML::Exception&) {
      throw ConfigError("seed must be an unsigned 64-bit integer");
    }
  }
  if (root["output_dir"]) c.output_dir = root["output_dir"].as<std::string>();
  read(root, "threads", c.threads, "threads");

  if (const auto p = root["prior"]) {
    if (const auto mu = p["mu0"]) {
      if (!mu.IsSequence() || mu.size() != 4) throw ConfigError("prior.mu0 must list 4 values");
      for (int i = 0; i < 4; ++i) c.prior.mu0[i] = mu[i].as<double>();
    }
    if (const auto s = p["sigma0"]) {
      if (!s.IsSequence() || s.size() != 4) throw ConfigError("prior.sigma0 must be a 4x4 matrix");
      for (int i = 0; i < 4; ++i) {
        if (!s[i].IsSequence() || s[i].size() != 4) throw ConfigError("prior.sigma0 must be a 4x4 matrix");
        for (int j = 0; j < 4; ++j) c.prior.sigma0(i, j) = s[i][j].as<double>();
      }
    }
    read(p, "m0", c.prior.m0, "prior");
    read(p, "s0", c.prior.s0, "prior");
  }

  if (const auto pd = root["pd"]) {
    read(pd, "mic", c.pd.mic, "pd");
    read(pd, "k", c.pd.k, "pd");
    read_duration(pd, "grid_step", c.pd.grid_step, "pd");
    read_duration(pd, "eval_start", c.pd.eval_start, "pd");
    if (pd["eval_end"]) c.pd.eval_end = parse_duration(pd["eval_end"], "pd.eval_end");
  }

  if (const auto sch = root["schedules"]) {
    if (!sch.IsMap()) throw ConfigError("schedules must map names to schedule settings");
    c.schedules.clear();
    for (const auto& kv : sch) {
      ScheduleSpec s;
      s.name = kv.first.as<std::string>();
      const auto& n = kv.second;
      const std::string where = "schedules." + s.name;
      read_duration(n, "infusion_duration", s.infusion_duration, where);
      read(n, "n_doses", s.n_doses, where);
      read_duration(n, "interval", s.interval, where);
      read(n, "amount_g", s.amount_g, where);
      read_durations(n, "anchors", s.anchors, where);
      c.schedules.push_back(std::move(s));
    }
  }

  // a shared sigma_RE grid, overridable per experiment
  if (root["sigma_re"]) {
    const auto grid = parse_durations(root["sigma_re"], "sigma_re");
    c.stochastic.sigma_re = c.delay.sigma_re = c.best_time.sigma_re = grid;
  }

  if (const auto n = root["objective1_stochastic"]) {
    read(n, "n_patients", c.stochastic.n_patients, "objective1_stochastic");
    read(n, "replicates", c.stochastic.replicates, "objective1_stochastic");
    read_durations(n, "sigma_re", c.stochastic.sigma_re, "objective1_stochastic");
  }
  if (const auto n = root["objective1_fixed"]) {
    read(n, "n_patients", c.fixed.n_patients, "objective1_fixed");
    read_durations(n, "delta_f", c.fixed.delta_f, "objective1_fixed");
  }
  if (root["delta_f"]) c.fixed.delta_f = parse_durations(root["delta_f"], "delta_f");
  if (const auto n = root["delay"]) {
    read(n, "n_patients", c.delay.n_patients, "delay");
    read(n, "replicates", c.delay.replicates, "delay");
    read_durations(n, "sigma_re", c.delay.sigma_re, "delay");
    read_durations(n, "delays", c.delay.delays, "delay");
  }
  if (const auto n = root["best_time"]) {
    read(n, "n_patients", c.best_time.n_patients, "best_time");
    read(n, "search_replicates", c.best_time.search_replicates, "best_time");
    read(n, "final_replicates", c.best_time.final_replicates, "best_time");
    read_durations(n, "sigma_re", c.best_time.sigma_re, "best_time");
    read_window(n, "first_draw", c.best_time.first_lo, c.best_time.first_hi, "best_time");
    if (const auto g = n["candidate_grids"]) c.best_time.grids = parse_grids(g, "best_time.candidate_grids");
  }
  if (const auto n = root["informed_allocation"]) {
    const std::string w = "informed_allocation";
    read(n, "n_cohorts", c.allocation.n_cohorts, w);
    read(n, "cohort_size", c.allocation.cohort_size, w);
    read(n, "n_second_draws", c.allocation.n_second_draws, w);
    read(n, "final_replicates", c.allocation.final_replicates, w);
    read(n, "ci_level", c.allocation.ci_level, w);
    read(n, "ci_draws", c.allocation.ci_draws, w);
    read(n, "quadrature_order", c.allocation.quadrature_order, w);
    read_durations(n, "sigma_re", c.allocation.sigma_re, w);
    read_window(n, "first_draw", c.allocation.first_lo, c.allocation.first_hi, w);
    read_window(n, "second_draw", c.allocation.second_lo, c.allocation.second_hi, w);
    read(n, "max_excluded_fraction", c.allocation.max_excluded_fraction, w);
    if (const auto cr = n["criteria"]) {
      c.allocation.criteria.clear();
      for (const auto& x : cr) c.allocation.criteria.push_back(parse_criterion(x.as<std::string>()));
    }
  }
  return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path,
                                    std::optional<Scale> scale_override = std::nullopt) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), scale_override);
}

/// Every setting that influences results, for the run manifest. Keys match
/// the config file, durations in hours, so the echo loads back unchanged.
inline nlohmann::ordered_json config_json(const ExperimentConfig& c) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["scale"] = to_string(c.scale);
  if (c.seed) j["seed"] = *c.seed;
  ordered_json sigma0 = ordered_json::array();
  for (int i = 0; i < 4; ++i) {
    ordered_json row = ordered_json::array();
    for (int k = 0; k < 4; ++k) row.push_back(c.prior.sigma0(i, k));
    sigma0.push_back(row);
  }
  j["prior"] = {{"mu0", {c.prior.mu0[0], c.prior.mu0[1], c.prior.mu0[2], c.prior.mu0[3]}},
                {"sigma0", sigma0},
                {"m0", c.prior.m0},
                {"s0", c.prior.s0}};
  ordered_json pd = {{"mic", c.pd.mic}, {"k", c.pd.k}, {"grid_step", c.pd.grid_step}, {"eval_start", c.pd.eval_start}};
  if (c.pd.eval_end) pd["eval_end"] = *c.pd.eval_end;
  j["pd"] = pd;
  ordered_json sch = ordered_json::object();
  for (const auto& s : c.schedules)
    sch[s.name] = {{"infusion_duration", s.infusion_duration},
                   {"n_doses", s.n_doses},
                   {"interval", s.interval},
                   {"amount_g", s.amount_g},
                   {"anchors", s.anchors}};
  j["schedules"] = sch;
  j["objective1_stochastic"] = {{"n_patients", c.stochastic.n_patients},
                                {"replicates", c.stochastic.replicates},
                                {"sigma_re", c.stochastic.sigma_re}};
  j["objective1_fixed"] = {{"n_patients", c.fixed.n_patients}, {"delta_f", c.fixed.delta_f}};
  j["delay"] = {{"n_patients", c.delay.n_patients},
                {"replicates", c.delay.replicates},
                {"sigma_re", c.delay.sigma_re},
                {"delays", c.delay.delays}};
  ordered_json grids = ordered_json::array();
  for (const auto& g : c.best_time.grids) grids.push_back(g.times);
  j["best_time"] = {{"n_patients", c.best_time.n_patients},
                    {"search_replicates", c.best_time.search_replicates},
                    {"final_replicates", c.best_time.final_replicates},
                    {"sigma_re", c.best_time.sigma_re},
                    {"first_draw", {c.best_time.first_lo, c.best_time.first_hi}},
                    {"candidate_grids", grids}};
  ordered_json crit = ordered_json::array();
  for (auto k : c.allocation.criteria) crit.push_back(to_string(k));
  j["informed_allocation"] = {{"n_cohorts", c.allocation.n_cohorts},
                              {"cohort_size", c.allocation.cohort_size},
                              {"n_second_draws", c.allocation.n_second_draws},
                              {"final_replicates", c.allocation.final_replicates},
                              {"criteria", crit},
                              {"sigma_re", c.allocation.sigma_re},
                              {"ci_level", c.allocation.ci_level},
                              {"ci_draws", c.allocation.ci_draws},
                              {"quadrature_order", c.allocation.quadrature_order},
                              {"first_draw", {c.allocation.first_lo, c.allocation.first_hi}},
                              {"second_draw", {c.allocation.second_lo, c.allocation.second_hi}},
                              {"max_excluded_fraction", c.allocation.max_excluded_fraction}};
  return j;
}

}  // namespace tresim
