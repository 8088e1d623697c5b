#include "irlab/dqn.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "irlab/optim.hpp"
#include "irlab/state_repr.hpp"

namespace irlab {

void DqnConfig::validate() const {
  if (episodes < 1) throw std::invalid_argument("DqnConfig: episodes must be >= 1");
  if (replay_capacity < 1) throw std::invalid_argument("DqnConfig: replay_capacity must be >= 1");
  if (batch_size < 1) throw std::invalid_argument("DqnConfig: batch_size must be >= 1");
  if (target_sync_interval < 1) {
    throw std::invalid_argument("DqnConfig: target_sync_interval must be >= 1");
  }
  if (!(eps_start >= 0.0 && eps_start <= 1.0 && eps_end >= 0.0 && eps_end <= 1.0)) {
    throw std::invalid_argument("DqnConfig: epsilon bounds must lie in [0, 1]");
  }
  if (eps_decay_steps < 1) throw std::invalid_argument("DqnConfig: eps_decay_steps must be >= 1");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("DqnConfig: learning_rate must be positive");
  if (hidden.empty()) throw std::invalid_argument("DqnConfig: need at least one hidden layer");
  if (!(discount >= 0.0 && discount < 1.0)) {
    throw std::invalid_argument("DqnConfig: discount must lie in [0, 1)");
  }
  if (update_every < 1) throw std::invalid_argument("DqnConfig: update_every must be >= 1");
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
  if (capacity_ == 0) throw std::invalid_argument("ReplayBuffer: capacity must be positive");
  entries_.reserve(capacity_);
}

void ReplayBuffer::push(ReplayEntry entry) {
  if (size_ < capacity_) {
    entries_.push_back(std::move(entry));
    ++size_;
  } else {
    entries_[head_] = std::move(entry);
    head_ = (head_ + 1) % capacity_;
  }
}

const ReplayEntry& ReplayBuffer::sample(Rng& rng) const {
  if (size_ == 0) throw std::runtime_error("ReplayBuffer: sample from empty buffer");
  return at(static_cast<std::size_t>(rand_int(rng, 0, static_cast<int>(size_) - 1)));
}

const ReplayEntry& ReplayBuffer::at(std::size_t logical_index) const {
  if (logical_index >= size_) throw std::out_of_range("ReplayBuffer: index past end");
  return entries_[(head_ + logical_index) % size_];
}

Eigen::VectorXd dqn_q_values(const Mlp& q_net, const PendulumSpec& spec,
                             const PendulumState& state) {
  Eigen::MatrixXd input = pendulum_state_repr(spec, state).transpose();
  return q_net.forward(input, ForwardMode::Eval)[0].row(0).transpose();
}

DqnLoss dqn_td_loss(const Mlp& q_net, const Eigen::MatrixXd& states,
                    const std::vector<int>& actions, const Eigen::VectorXd& targets) {
  const Eigen::Index n = states.rows();
  if (static_cast<Eigen::Index>(actions.size()) != n || targets.size() != n) {
    throw std::invalid_argument("dqn_td_loss: batch size mismatch");
  }
  if (n == 0) throw std::invalid_argument("dqn_td_loss: empty batch");

  Mlp::Cache cache;
  const Eigen::MatrixXd q = q_net.forward(states, ForwardMode::Eval, nullptr, &cache)[0];
  Eigen::MatrixXd head_grad = Eigen::MatrixXd::Zero(n, q.cols());
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const int a = actions[static_cast<std::size_t>(i)];
    if (a < 0 || a >= q.cols()) throw std::invalid_argument("dqn_td_loss: action out of range");
    const double diff = q(i, a) - targets(i);
    loss += diff * diff / static_cast<double>(n);
    head_grad(i, a) = 2.0 * diff / static_cast<double>(n);
  }
  return {loss, q_net.backward(cache, {head_grad})};
}

PendulumPolicy dqn_greedy_policy(Mlp q_net, PendulumSpec spec) {
  return [q_net = std::move(q_net), spec](const PendulumState& state) {
    Eigen::VectorXd q = dqn_q_values(q_net, spec, state);
    Eigen::Index best = 0;
    q.maxCoeff(&best);
    return static_cast<int>(best);
  };
}

DqnResult train_dqn_pendulum(const PendulumSpec& spec, const DqnConfig& config) {
  spec.validate();
  config.validate();

  std::vector<int> widths = {kPendulumReprDim};
  widths.insert(widths.end(), config.hidden.begin(), config.hidden.end());
  Mlp q_net(widths, {spec.action_count}, Activation::ReLU, 0.0,
            sub_seed(config.seed, 0xd11));
  Mlp target = q_net;

  AdamConfig adam_cfg;
  adam_cfg.learning_rate = config.learning_rate;
  AdamState adam = AdamState::init(q_net.params(), adam_cfg);

  ReplayBuffer buffer(static_cast<std::size_t>(config.replay_capacity));
  Rng env_rng(sub_seed(config.seed, 0xd12));
  Rng batch_rng(sub_seed(config.seed, 0xd13));

  std::vector<double> returns;
  returns.reserve(static_cast<std::size_t>(config.episodes));
  long global_step = 0;

  for (int episode = 0; episode < config.episodes; ++episode) {
    PendulumState state = pendulum_random_start(spec, env_rng);
    double ep_return = 0.0;

    for (int t = 0; t < spec.episode_len; ++t) {
      const double frac =
          std::min(1.0, static_cast<double>(global_step) / config.eps_decay_steps);
      const double eps = config.eps_start + frac * (config.eps_end - config.eps_start);

      int action;
      if (rand_uniform(env_rng) < eps) {
        action = rand_int(env_rng, 0, spec.action_count - 1);
      } else {
        Eigen::VectorXd q = dqn_q_values(q_net, spec, state);
        Eigen::Index best = 0;
        q.maxCoeff(&best);
        action = static_cast<int>(best);
      }

      const double reward = pendulum_reward(state, action, spec);
      const PendulumState next = pendulum_step(spec, state, action);
      ep_return += reward;
      buffer.push({pendulum_state_repr(spec, state), action, reward,
                   pendulum_state_repr(spec, next)});
      state = next;
      ++global_step;

      if (buffer.size() >= static_cast<std::size_t>(config.batch_size) &&
          global_step % config.update_every == 0) {
        const int n = config.batch_size;
        Eigen::MatrixXd states(n, kPendulumReprDim), nexts(n, kPendulumReprDim);
        Eigen::VectorXd rewards(n);
        std::vector<int> actions(static_cast<std::size_t>(n));
        for (int i = 0; i < n; ++i) {
          const ReplayEntry& e = buffer.sample(batch_rng);
          states.row(i) = e.state.transpose();
          nexts.row(i) = e.next_state.transpose();
          rewards(i) = e.reward;
          actions[static_cast<std::size_t>(i)] = e.action;
        }

        Eigen::MatrixXd q_next = target.forward(nexts, ForwardMode::Eval)[0];
        Eigen::VectorXd y = rewards + config.discount * q_next.rowwise().maxCoeff();

        DqnLoss td = dqn_td_loss(q_net, states, actions, y);
        if (!std::isfinite(td.loss)) {
          throw std::runtime_error(
              "train_dqn_pendulum: non-finite loss at step " + std::to_string(global_step) +
              " (episode " + std::to_string(episode) + "); try a lower learning rate");
        }
        adam_step(q_net.params(), td.grads, adam);
      }

      if (global_step % config.target_sync_interval == 0) {
        target.params() = q_net.params();
      }
    }
    returns.push_back(ep_return);
  }

  return {std::move(q_net), std::move(returns)};
}

}  // namespace irlab
