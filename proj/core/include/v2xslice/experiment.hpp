#ifndef V2XSLICE_EXPERIMENT_HPP_
#define V2XSLICE_EXPERIMENT_HPP_

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "v2xslice/drl.hpp"
#include "v2xslice/scenario.hpp"

namespace v2xslice {

inline constexpr const char* kExperiments[] = {"train-a2c", "train-drqn", "evaluate", "density-sweep",
                                               "validate-gradients"};

struct EvaluateSettings {
  int episodes = 200;
  std::vector<std::string> schemes{"a2c", "drqn", "random"};
  std::string a2c_checkpoint;   // empty: train one with the a2c settings first
  std::string drqn_checkpoint;  // empty: train one with the drqn settings first
  bool greedy = false;          // argmax instead of sampling for the A2C actor
  std::string random_mode = "fixed";  // fixed | per-epoch
  bool epoch_csv = true;
};

struct SweepSettings {
  std::vector<int> vue_counts{25, 50, 100};
  std::vector<std::string> schemes{"random"};
  int seeds = 5;
  int episodes = 1;  // per (density, seed) cell
  std::string random_mode = "fixed";
};

struct GradientSettings {
  int toy_nets = 20;
  std::size_t window = 5;
  int pg_episodes = 10000;
};

struct TraceSettings {
  bool packets = false;
  bool transmissions = false;
};

struct ExperimentConfig {
  std::string experiment = "evaluate";
  std::uint64_t seed = 1;
  int workers = 1;
  Scenario scenario = default_scenario();
  A2CConfig a2c;
  DrqnConfig drqn;
  EvaluateSettings evaluate;
  SweepSettings sweep;
  GradientSettings gradients;
  TraceSettings traces;
};

/// Parses an experiment document. Relative checkpoint and scenario paths
/// resolve against `base_dir`. Errors are SchemaError with a JSON pointer.
ExperimentConfig experiment_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
nlohmann::json to_json(const ExperimentConfig& c);

/// Loads a file and rethrows schema errors as ConfigError "<file>:<line>: <pointer>: <message>".
ExperimentConfig load_experiment(const std::filesystem::path& path);

struct RunOutcome {
  int exit_code = 0;
  bool partial = false;
  std::string error;
  std::vector<std::string> files;  // relative to the output directory
};

/// Executes the experiment, writing CSV/JSON artifacts and manifest.json.
/// Failures after the output directory exists are reported in the manifest.
RunOutcome run_experiment(const ExperimentConfig& cfg, const std::filesystem::path& out_dir);

struct SchemeResults {
  std::string scheme;
  std::string fingerprint;  // scenario + evaluation seed + episode count
  std::vector<std::string> slice_names;
  std::vector<EpisodeSummary> episodes;
};

struct SchemeSummary {
  std::string scheme;
  std::vector<std::string> slice_names;
  std::size_t episodes = 0;
  double mean_reward = 0.0;
  double std_reward = 0.0;
  std::vector<double> pdr;
  std::vector<double> delay;
  double improvement_vs_random = 0.0;  // percent
  double improvement_vs_drqn = 0.0;    // percent, NaN without a drqn column
  double p_vs_random = 1.0;            // Welch, H1: scheme mean > random mean
};

/// Requires a "random" entry and identical fingerprints throughout.
std::vector<SchemeSummary> compare_schemes(const std::vector<SchemeResults>& results);

std::string fingerprint(const Scenario& scenario, std::uint64_t eval_seed, int episodes);

/// Episode CSV round trip (scheme, fingerprint, episode, mean_reward, pdr_n, delay_n).
std::string episodes_csv(const std::vector<SchemeResults>& results);
std::vector<SchemeResults> parse_episodes_csv(const std::string& text);
std::string summary_csv(const std::vector<SchemeSummary>& rows);
/// Empirical CDF rows (scheme, value, cumulative_fraction).
std::string reward_cdf_csv(const std::vector<SchemeResults>& results);
std::string curve_csv_header(const std::vector<std::string>& slice_names);
std::string curve_csv_row(const CurveRow& row);

}  // namespace v2xslice

#endif  // V2XSLICE_EXPERIMENT_HPP_
