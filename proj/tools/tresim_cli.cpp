// tresim: command-line driver for the draw-time recording error studies.
//
//   tresim <experiment> [--config FILE] [--seed N] [--out DIR]
//          [--scale desk|paper] [--schedule short|long|both] [--threads N]
//   tresim summarize --records FILE [--group-by col,col,...] [--json]
//
// Exit status: 0 success, 2 usage or config error, 3 runtime failure.

#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "tresim/tresim.hpp"

namespace {

constexpr int kUsageError = 2;
constexpr int kRuntimeError = 3;

struct Options {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out_dir;
  std::string scale;
  std::string schedule = "both";
  std::optional<unsigned> threads;
  std::string records_path;
  std::vector<std::string> group_by;
  bool json = false;
};

tresim::ExperimentConfig resolve_config(const Options& o) {
  std::optional<tresim::Scale> scale;
  if (!o.scale.empty()) scale = tresim::parse_scale(o.scale);
  auto cfg = o.config_path.empty() ? tresim::ExperimentConfig::defaults(scale.value_or(tresim::Scale::desk))
                                   : tresim::load_config(o.config_path, scale);
  if (o.seed) cfg.seed = *o.seed;
  if (!o.out_dir.empty()) cfg.output_dir = o.out_dir;
  if (o.threads) cfg.threads = *o.threads;
  if (o.schedule != "both") {
    std::erase_if(cfg.schedules, [&](const tresim::ScheduleSpec& s) { return s.name != o.schedule; });
    if (cfg.schedules.empty()) throw tresim::ConfigError("no schedule named '" + o.schedule + "' in the config");
  }
  cfg.validate();
  return cfg;
}

int run_summarize(const Options& o) {
  std::ifstream in(o.records_path);
  if (!in) {
    std::cerr << "error: cannot open " << o.records_path << '\n';
    return kUsageError;
  }
  const auto records = tresim::read_records_csv(in);
  std::vector<std::string> warnings;
  const auto groups = o.group_by.empty() ? std::vector<std::string>{"experiment", "schedule", "arm", "sigma_or_delta_h"}
                                         : o.group_by;
  const auto rows = tresim::summarize(records, groups, &warnings);
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
  if (o.json) std::cout << tresim::summary_json(rows).dump(2) << '\n';
  else tresim::write_summary_csv(std::cout, rows);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation studies of blood-draw time recording errors in Bayesian dose individualization"};
  app.require_subcommand(1);
  app.fallthrough();

  Options o;
  app.add_option("--config", o.config_path, "YAML experiment config")->check(CLI::ExistingFile);
  app.add_option("--seed", o.seed, "master seed (overrides the config)");
  app.add_option("--out", o.out_dir, "output directory (overrides the config)");
  app.add_option("--scale", o.scale, "desk or paper defaults")->check(CLI::IsMember({"desk", "paper"}));
  app.add_option("--schedule", o.schedule, "restrict to one schedule")
      ->check(CLI::IsMember({"short", "long", "both"}));
  app.add_option("--threads", o.threads, "worker threads")->check(CLI::PositiveNumber);

  std::vector<CLI::App*> experiments;
  for (auto id : tresim::kExperimentIds)
    experiments.push_back(app.add_subcommand(std::string(id), "run the " + std::string(id) + " experiment"));
  auto* summarize = app.add_subcommand("summarize", "summarize an existing record table");
  summarize->add_option("--records", o.records_path, "record CSV")->required();
  summarize->add_option("--group-by", o.group_by, "grouping columns")->delimiter(',');
  summarize->add_flag("--json", o.json, "emit JSON instead of CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kUsageError;
  }

  try {
    if (summarize->parsed()) return run_summarize(o);
    for (auto* sub : experiments) {
      if (!sub->parsed()) continue;
      const auto cfg = resolve_config(o);
      const auto out = tresim::run_experiment(cfg, sub->get_name());
      for (const auto& w : out.result.warnings) std::cerr << "warning: " << w << '\n';
      std::cerr << sub->get_name() << ": " << out.result.records.size() << " records, "
                << out.result.n_excluded_fits << " excluded fits, " << out.result.n_excluded_records
                << " excluded records\n";
      for (const auto& f : out.files) std::cout << f.string() << '\n';
      return 0;
    }
  } catch (const tresim::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kUsageError;
  } catch (const std::exception& e) {
    std::cerr << "runtime failure: " << e.what() << '\n';
    return kRuntimeError;
  }
  return kUsageError;
}
