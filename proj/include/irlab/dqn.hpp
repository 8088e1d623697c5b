#pragma once

#include <cstdint>
#include <vector>

#include "irlab/mlp.hpp"
#include "irlab/pendulum.hpp"
#include "irlab/trajectory.hpp"

namespace irlab {

struct DqnConfig {
  int episodes = 2000;
  int replay_capacity = 100000;
  int batch_size = 64;
  int target_sync_interval = 1000;  // environment steps between target copies
  double eps_start = 1.0;
  double eps_end = 0.05;
  int eps_decay_steps = 500000;  // linear decay horizon in environment steps
  double learning_rate = 1e-3;
  std::vector<int> hidden = {64, 64};
  std::uint64_t seed = 0;
  double discount = 0.99;
  int update_every = 4;  // environment steps between gradient updates

  void validate() const;
};

struct ReplayEntry {
  Eigen::Vector3d state;
  int action = 0;
  double reward = 0.0;
  Eigen::Vector3d next_state;
};

/// Fixed-capacity ring buffer; once full, each push evicts the oldest entry.
class ReplayBuffer {
 public:
  explicit ReplayBuffer(std::size_t capacity);

  void push(ReplayEntry entry);
  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  const ReplayEntry& sample(Rng& rng) const;
  /// Entry by logical age: index 0 is the oldest retained entry.
  const ReplayEntry& at(std::size_t logical_index) const;

 private:
  std::vector<ReplayEntry> entries_;
  std::size_t capacity_;
  std::size_t head_ = 0;
  std::size_t size_ = 0;
};

struct DqnResult {
  Mlp q_net;
  std::vector<double> episode_returns;  // undiscounted sum per episode
};

/// Action values for one state, eval mode.
Eigen::VectorXd dqn_q_values(const Mlp& q_net, const PendulumSpec& spec,
                             const PendulumState& state);

struct DqnLoss {
  double loss = 0.0;
  MlpParams grads;
};

/// Mean squared error of the chosen-action values against fixed targets,
/// with exact parameter gradients. This is the training update's objective;
/// the targets are treated as constants.
DqnLoss dqn_td_loss(const Mlp& q_net, const Eigen::MatrixXd& states,
                    const std::vector<int>& actions, const Eigen::VectorXd& targets);

/// Greedy policy over a trained action-value network (lowest index on ties).
PendulumPolicy dqn_greedy_policy(Mlp q_net, PendulumSpec spec);

/// Q-learning on the pendulum with experience replay, a periodically synced
/// target network and linear epsilon decay. The task is continuing, so episode
/// timeout does not truncate bootstrapping. Throws if the temporal-difference
/// loss turns non-finite.
DqnResult train_dqn_pendulum(const PendulumSpec& spec, const DqnConfig& config);

}  // namespace irlab
