#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "irlab/mdp.hpp"
#include "irlab/objectworld.hpp"
#include "irlab/pendulum.hpp"
#include "irlab/rng.hpp"

namespace irlab {

enum class EnvTag { Objectworld, Pendulum };

std::string env_tag_name(EnvTag tag);
EnvTag env_tag_from_name(const std::string& name);

struct DiscreteStep {
  int state = 0;
  int action = 0;
  int next_state = 0;
};

struct ContinuousStep {
  PendulumState state;
  int action = 0;
  PendulumState next;
};

using DiscreteTrajectory = std::vector<DiscreteStep>;
using ContinuousTrajectory = std::vector<ContinuousStep>;

/// Homogeneous collection of expert trajectories plus generation provenance.
/// Exactly one of `discrete` / `continuous` is populated, matching `env`.
struct Dataset {
  EnvTag env = EnvTag::Objectworld;
  std::uint64_t seed = 0;
  std::map<std::string, std::string> metadata;
  std::vector<DiscreteTrajectory> discrete;
  std::vector<ContinuousTrajectory> continuous;

  std::size_t size() const {
    return env == EnvTag::Objectworld ? discrete.size() : continuous.size();
  }
  /// Non-empty, tag-consistent, every trajectory chained (next state of step t
  /// equals state of step t+1, within 1e-6 for pendulum vectors).
  void validate() const;
};

/// Inverse-CDF draw from one row of action/state probabilities; keeps
/// sampling reproducible across standard library implementations.
int sample_index(Rng& rng, const Eigen::Ref<const Eigen::RowVectorXd>& probs);

/// Optimal demonstrator under the true reward: greedy when temperature <= 0,
/// Boltzmann otherwise.
Policy expert_policy_objectworld(const MdpModel& mdp, const RewardTable& reward,
                                 double boltzmann_temperature = 0.0);

/// `count` rollouts of `length` steps, uniform random start states, actions
/// from the policy, next states from the transition model. Trajectory i uses
/// its own generator seeded with sub_seed(seed, i).
Dataset sample_objectworld_trajectories(const Objectworld& world, const Policy& policy,
                                        int count, int length, std::uint64_t seed);

using PendulumPolicy = std::function<int(const PendulumState&)>;

/// `count` rollouts of `length` steps from random starts under a deterministic
/// state-to-action policy; dynamics are deterministic, so randomness only
/// enters through the starts (sub-seeded per trajectory).
Dataset sample_pendulum_trajectories(const PendulumSpec& spec, const PendulumPolicy& policy,
                                     int count, int length, std::uint64_t seed);

/// Text form: `# env=<tag> seed=<n> [key=value ...]` then one CSV row per
/// step, `episode,t,s,a,s_next` (objectworld, integers) or
/// `episode,t,cos,sin,thdot,a,cos_next,sin_next,thdot_next` (pendulum, 9
/// significant digits). Loading validates chaining and reports line numbers.
void dataset_save(const Dataset& dataset, const std::string& path);
Dataset dataset_load(const std::string& path);

}  // namespace irlab
