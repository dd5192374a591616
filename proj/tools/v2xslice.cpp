#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "v2xslice/experiment.hpp"

namespace fs = std::filesystem;
using namespace v2xslice;

namespace {

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
};

void add_common(CLI::App* cmd, Common& c, bool outputs = true) {
  cmd->add_option("-c,--config", c.config, "experiment JSON file (defaults apply when omitted)")
      ->check(CLI::ExistingFile);
  if (outputs) cmd->add_option("-o,--out", c.out, "output directory (overrides V2XSLICE_OUT_DIR)");
  cmd->add_option("-s,--seed", c.seed, "master seed (overrides the config)");
  cmd->add_option("-w,--workers", c.workers, "worker threads for episode collection")->check(CLI::Range(1, 256));
}

ExperimentConfig resolve_config(const Common& c, const std::string& experiment) {
  ExperimentConfig cfg = c.config.empty() ? ExperimentConfig{} : load_experiment(c.config);
  if (!experiment.empty()) cfg.experiment = experiment;
  if (c.seed) cfg.seed = *c.seed;
  if (c.workers) cfg.workers = *c.workers;
  return cfg;
}

fs::path output_dir(const Common& c, const ExperimentConfig& cfg) {
  if (!c.out.empty()) return c.out;
  if (const char* env = std::getenv("V2XSLICE_OUT_DIR"); env && *env) return env;
  return fs::path("runs") / fmt::format("{}-seed{}", cfg.experiment, cfg.seed);
}

int run(const Common& c, const std::string& experiment) {
  const ExperimentConfig cfg = resolve_config(c, experiment);
  const fs::path out = output_dir(c, cfg);
  const RunOutcome r = run_experiment(cfg, out);
  for (const auto& f : r.files) std::cout << (out / f).string() << "\n";
  if (r.partial) {
    std::cerr << "v2xslice: " << cfg.experiment << " stopped early: " << r.error << "\n"
              << "v2xslice: partial results are flagged in " << (out / "manifest.json").string() << "\n";
  }
  return r.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Network-sliced C-V2X Mode-4 simulator and DRL slicing controller"};
  app.require_subcommand(1);

  Common common;
  std::string chosen;
  for (const char* name : kExperiments) {
    auto* cmd = app.add_subcommand(name, fmt::format("run the {} experiment", name));
    add_common(cmd, common);
    cmd->callback([&chosen, name] { chosen = name; });
  }
  auto* run_cmd = app.add_subcommand("run", "run the experiment named in the config file");
  add_common(run_cmd, common);
  run_cmd->get_option("--config")->required();

  std::vector<std::string> inputs;
  std::string compare_out;
  auto* compare_cmd = app.add_subcommand("compare", "summarize episodes.csv files from matched evaluations");
  compare_cmd->add_option("inputs", inputs, "episodes.csv files")->required()->check(CLI::ExistingFile);
  compare_cmd->add_option("-o,--out", compare_out, "write summary CSV here instead of stdout");

  auto* show_cmd = app.add_subcommand("show-config", "print the fully resolved experiment config");
  add_common(show_cmd, common, false);
  auto* actions_cmd = app.add_subcommand("action-space", "list the slicing configurations of the scenario");
  add_common(actions_cmd, common, false);

  CLI11_PARSE(app, argc, argv);

  try {
    if (!chosen.empty()) return run(common, chosen);
    if (run_cmd->parsed()) return run(common, "");
    if (compare_cmd->parsed()) {
      std::vector<SchemeResults> all;
      for (const auto& path : inputs)
        for (auto& r : parse_episodes_csv(read_text_file(path))) all.push_back(std::move(r));
      const std::string csv = summary_csv(compare_schemes(all));
      if (compare_out.empty()) {
        std::cout << csv;
      } else {
        std::ofstream(compare_out, std::ios::binary) << csv;
      }
      return 0;
    }
    if (show_cmd->parsed()) {
      std::cout << to_json(resolve_config(common, "")).dump(2) << "\n";
      return 0;
    }
    if (actions_cmd->parsed()) {
      const ExperimentConfig cfg = resolve_config(common, "");
      const ActionSpace space = cfg.scenario.action_space();
      for (std::size_t i = 0; i < space.size(); ++i) std::cout << i << "\t" << space.at(i).to_string() << "\n";
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "v2xslice: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
