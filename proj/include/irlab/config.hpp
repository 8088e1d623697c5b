#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "irlab/baselines.hpp"
#include "irlab/cwae.hpp"
#include "irlab/dqn.hpp"
#include "irlab/objectworld.hpp"
#include "irlab/pendulum.hpp"

namespace irlab {

/// Everything one experiment run needs: environment, expert generation,
/// exactly one reward-learning method and its training knobs, plus the output
/// directory and the global seed that all stage seeds derive from.
struct ExperimentConfig {
  std::uint64_t seed = 0;
  std::string out_dir = ".";

  EnvTag env = EnvTag::Objectworld;
  ObjectworldSpec objectworld;
  PendulumSpec pendulum;

  int expert_count = 128;
  int expert_length = -1;  // -1: 16 on the grid, the episode length on the pendulum
  double expert_temperature = 0.0;  // 0 = greedy demonstrator
  int eval_count = 5;               // held-out pendulum trajectories
  DqnConfig dqn;

  std::string method = "cwae";  // cwae | maxent | deep-maxent | birl
  CwaeTrainConfig cwae;
  ExtractMode extraction = ExtractMode::Probe;
  bool orient = true;  // resolve the latent sign before comparisons
  int window = 25;     // error-series smoothing window
  MaxEntConfig maxent;
  DeepMaxEntConfig deep_maxent;
  BirlConfig birl;

  void validate() const;
};

/// Sectioned key=value text with `[env]`, `[expert]`, `[method]` and `[train]`
/// sections; `#` starts a comment. Unknown sections, unknown keys, duplicate
/// keys and malformed values are errors (with line numbers). Fields not
/// mentioned keep their defaults; seed and output directory come from the
/// command line, not the file.
ExperimentConfig load_experiment_config(const std::string& path);

/// The raw sections, exposed for tooling.
using ConfigSection = std::map<std::string, std::string>;
std::map<std::string, ConfigSection> parse_config_sections(const std::string& path);

}  // namespace irlab
