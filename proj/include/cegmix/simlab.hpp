#pragma once

#include "cegmix/data.hpp"
#include "cegmix/partition.hpp"
#include "cegmix/search.hpp"

#include <Eigen/Core>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cegmix {

struct InfeasibleConfig : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ScenarioConfig {
  std::string id;  // empty = derive from family/units/stages
  Family family = Family::Binomial;
  int units = 50;
  int stages = 2;
  int replicates = 50;
  int trials_per_situation = 100;  // Binomial only
  int obs_per_edge = 30;           // Weibull only
  double scale = 50.0;             // Weibull known scale
  int min_units_per_stage = 0;     // 0 = family default (2 situations, 5 edges)
  double separation = 0.05;        // smallest allowed gap between stage parameters
  std::uint64_t seed = 0;
};

int effective_min_units(const ScenarioConfig& cfg);
std::string scenario_label(const ScenarioConfig& cfg);
void validate_scenario(const ScenarioConfig& cfg);

// Stage parameters: success probabilities equally spaced on [0.1, 0.9];
// Weibull shapes equally spaced in log on [0.5, 4.0]. One stage sits at the
// midpoint of the respective scale.
Eigen::VectorXd stage_probabilities(int stages);
Eigen::VectorXd stage_shapes(int stages);

// Stage sizes are uniform over compositions respecting the minimum, unit
// order is shuffled; everything is deterministic in cfg.seed.
std::pair<TransitionData, Partition> generate_situation_dataset(const ScenarioConfig& cfg);
std::pair<HoldingData, Partition> generate_edge_dataset(const ScenarioConfig& cfg);

struct TrialRecord {
  std::string scenario;
  int replicate = 0;
  std::string method;  // "ahc" or "mixture"
  double seconds = 0.0;
  int k = 0;
  double nmi = 0.0;
  double rand = 0.0;
  double conv_prop_1_01 = -1.0;  // mixture only; negative = not applicable
  double conv_prop_1_10 = -1.0;
  std::string error;  // nonempty = trial failed, numeric fields unset
};

struct ExperimentConfig {
  std::vector<ScenarioConfig> scenarios;
  bool run_ahc = true;
  bool run_mixture = true;
  int jobs = 4;
  std::uint64_t master_seed = 0;
  int k_max = 10;
  SamplerConfig sampler{};
};

struct ExperimentResult {
  std::vector<TrialRecord> trials;  // ordered by (scenario, replicate, method)
};

// Runs every scenario x replicate on a worker pool. Each trial derives its
// own generator stream from (master_seed, scenario index, replicate); trial
// failures are recorded in the error field, never thrown. AHC runs on
// Binomial scenarios only.
ExperimentResult run_experiment(const ExperimentConfig& config);

// Output files: trials.csv (raw records), summary_table1.csv (AHC,
// situations), summary_table2.csv (mixture, situations), summary_table3.csv
// (mixture, edges), convergence.csv (mixture R-hat proportions), and
// manifest.json (config echo). All are written under dir.
void write_trials_csv(const std::string& path, const std::vector<TrialRecord>& trials);
std::vector<TrialRecord> read_trials_csv(const std::string& path);
void write_experiment_outputs(const std::string& dir, const ExperimentConfig& config,
                              const std::vector<TrialRecord>& trials);

ExperimentConfig parse_experiment_config(const std::string& json_text);
ExperimentConfig read_experiment_config(const std::string& path);

}  // namespace cegmix
