#include <doctest.h>

#include <array>
#include <cmath>

#include "irlab/dqn.hpp"
#include "irlab/gradcheck.hpp"
#include "irlab/state_repr.hpp"

using namespace irlab;

namespace {

ReplayEntry tagged_entry(double tag) {
  ReplayEntry e;
  e.state = Eigen::Vector3d(tag, 0, 0);
  e.action = 0;
  e.reward = tag;
  e.next_state = Eigen::Vector3d::Zero();
  return e;
}

double rollout_mean_reward(const PendulumSpec& spec, const PendulumPolicy& policy,
                           int episodes, std::uint64_t seed) {
  Rng rng(seed);
  double total = 0.0;
  long steps = 0;
  for (int ep = 0; ep < episodes; ++ep) {
    PendulumState state = pendulum_random_start(spec, rng);
    for (int t = 0; t < spec.episode_len; ++t) {
      const int action = policy(state);
      total += pendulum_reward(state, action, spec);
      state = pendulum_step(spec, state, action);
      ++steps;
    }
  }
  return total / static_cast<double>(steps);
}

}  // namespace

TEST_SUITE("dqn") {

TEST_CASE("replay buffer evicts oldest first") {
  ReplayBuffer buffer(3);
  CHECK(buffer.capacity() == 3);
  CHECK(buffer.size() == 0);

  for (int i = 0; i < 5; ++i) buffer.push(tagged_entry(i));
  CHECK(buffer.size() == 3);
  CHECK(buffer.at(0).reward == 2.0);
  CHECK(buffer.at(1).reward == 3.0);
  CHECK(buffer.at(2).reward == 4.0);
  CHECK_THROWS_AS((void)buffer.at(3), std::out_of_range);

  buffer.push(tagged_entry(5));
  CHECK(buffer.at(0).reward == 3.0);
  CHECK(buffer.at(2).reward == 5.0);
}

TEST_CASE("replay buffer rejects empty construction and empty sampling") {
  CHECK_THROWS_AS(ReplayBuffer(0), std::invalid_argument);
  ReplayBuffer buffer(4);
  Rng rng(1);
  CHECK_THROWS_AS((void)buffer.sample(rng), std::runtime_error);
}

TEST_CASE("replay sampling covers the buffer roughly uniformly") {
  ReplayBuffer buffer(4);
  for (int i = 0; i < 4; ++i) buffer.push(tagged_entry(i));

  Rng rng(7);
  std::array<int, 4> hits{};
  const int draws = 20000;
  for (int i = 0; i < draws; ++i) {
    ++hits[static_cast<std::size_t>(buffer.sample(rng).reward)];
  }
  for (const int h : hits) {
    CHECK(std::abs(h - draws / 4) < draws / 40);
  }
}

TEST_CASE("q values are the network forward pass on the normalized state") {
  PendulumSpec spec;
  Mlp net({kPendulumReprDim, 8}, {spec.action_count}, Activation::ReLU, 0.0, 11);
  const PendulumState state = PendulumState::from_theta(0.7, -2.5);

  const Eigen::VectorXd q = dqn_q_values(net, spec, state);
  REQUIRE(q.size() == spec.action_count);

  Eigen::MatrixXd input(1, kPendulumReprDim);
  input << std::cos(0.7), std::sin(0.7), -2.5 / spec.max_speed;
  const Eigen::VectorXd direct = net.forward(input, ForwardMode::Eval)[0].row(0).transpose();
  CHECK((q - direct).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("td loss on a zero network is the mean squared target") {
  PendulumSpec spec;
  Mlp net({kPendulumReprDim, 4}, {spec.action_count}, Activation::ReLU, 0.0, 13);
  net.params() = net.params().zeros_like();

  Eigen::MatrixXd states(2, kPendulumReprDim);
  states << 1, 0, 0, 0, 1, 0.5;
  const std::vector<int> actions = {3, 7};
  Eigen::VectorXd targets(2);
  targets << 1.0, -1.0;

  const DqnLoss out = dqn_td_loss(net, states, actions, targets);
  CHECK(out.loss == doctest::Approx(1.0).epsilon(1e-12));

  const Eigen::VectorXd& head_b = out.grads.head_b[0];
  CHECK(head_b(3) == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(head_b(7) == doctest::Approx(1.0).epsilon(1e-12));
  for (int a = 0; a < spec.action_count; ++a) {
    if (a != 3 && a != 7) CHECK(head_b(a) == 0.0);
  }
}

TEST_CASE("td loss rejects malformed batches") {
  PendulumSpec spec;
  Mlp net({kPendulumReprDim, 4}, {spec.action_count}, Activation::ReLU, 0.0, 13);
  Eigen::MatrixXd states(1, kPendulumReprDim);
  states << 1, 0, 0;

  CHECK_THROWS_AS(dqn_td_loss(net, states, {0, 1}, Eigen::VectorXd::Zero(1)),
                  std::invalid_argument);
  CHECK_THROWS_AS(dqn_td_loss(net, states, {spec.action_count}, Eigen::VectorXd::Zero(1)),
                  std::invalid_argument);
  CHECK_THROWS_AS(dqn_td_loss(net, Eigen::MatrixXd(0, kPendulumReprDim), {},
                              Eigen::VectorXd(0)),
                  std::invalid_argument);
}

TEST_CASE("td loss gradients pass finite differences") {
  PendulumSpec spec;
  Mlp net({kPendulumReprDim, 6, 6}, {spec.action_count}, Activation::Tanh, 0.0, 17);

  Rng rng(19);
  const int n = 8;
  Eigen::MatrixXd states(n, kPendulumReprDim);
  std::vector<int> actions;
  Eigen::VectorXd targets(n);
  for (int i = 0; i < n; ++i) {
    const PendulumState s = pendulum_random_start(spec, rng);
    states.row(i) = pendulum_state_repr(spec, s).transpose();
    actions.push_back(static_cast<int>(rand_int(rng, 0, spec.action_count - 1)));
    targets(i) = rand_normal(rng);
  }

  const MlpParams analytic = dqn_td_loss(net, states, actions, targets).grads;
  const auto loss = [&]() { return dqn_td_loss(net, states, actions, targets).loss; };
  const GradCheckReport report = finite_diff_check(net.params(), loss, analytic, 1e-5);
  CHECK(report.max_rel_error < 1e-5);
}

TEST_CASE("greedy policy breaks ties toward the lowest action") {
  PendulumSpec spec;
  Mlp net({kPendulumReprDim, 4}, {spec.action_count}, Activation::ReLU, 0.0, 23);
  net.params() = net.params().zeros_like();

  const PendulumPolicy policy = dqn_greedy_policy(net, spec);
  CHECK(policy(PendulumState::from_theta(0.0, 0.0)) == 0);
  CHECK(policy(PendulumState::from_theta(2.0, -4.0)) == 0);
}

TEST_CASE("config validation rejects bad settings") {
  DqnConfig config;
  config.batch_size = 0;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);

  config = DqnConfig{};
  config.eps_start = 1.5;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);

  config = DqnConfig{};
  config.update_every = 0;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);

  config = DqnConfig{};
  config.discount = 1.0;
  CHECK_THROWS_AS(config.validate(), std::invalid_argument);
}

TEST_CASE("short training run is deterministic per seed") {
  PendulumSpec spec;
  spec.episode_len = 40;

  DqnConfig config;
  config.episodes = 6;
  config.replay_capacity = 500;
  config.batch_size = 16;
  config.target_sync_interval = 60;
  config.eps_decay_steps = 200;
  config.hidden = {16};
  config.seed = 31;

  const DqnResult a = train_dqn_pendulum(spec, config);
  const DqnResult b = train_dqn_pendulum(spec, config);
  REQUIRE(a.episode_returns.size() == 6);
  CHECK(a.episode_returns == b.episode_returns);
  MlpParams delta = a.q_net.params();
  delta.axpy(-1.0, b.q_net.params());
  CHECK(delta.max_abs() == 0.0);

  config.seed = 32;
  const DqnResult c = train_dqn_pendulum(spec, config);
  CHECK(a.episode_returns != c.episode_returns);
}

TEST_CASE("desk-scale training beats a random policy") {
  PendulumSpec spec;
  spec.episode_len = 150;

  DqnConfig config;
  config.episodes = 200;
  config.replay_capacity = 20000;
  config.batch_size = 64;
  config.target_sync_interval = 500;
  config.eps_decay_steps = 15000;
  config.seed = 9;

  const DqnResult result = train_dqn_pendulum(spec, config);
  for (const double r : result.episode_returns) CHECK(std::isfinite(r));

  const PendulumPolicy trained = dqn_greedy_policy(result.q_net, spec);
  Rng policy_rng(77);
  const PendulumPolicy random = [&](const PendulumState&) {
    return static_cast<int>(rand_int(policy_rng, 0, spec.action_count - 1));
  };

  const double trained_reward = rollout_mean_reward(spec, trained, 6, 101);
  const double random_reward = rollout_mean_reward(spec, random, 6, 101);
  CHECK(trained_reward > random_reward + 0.5);
}

}  // TEST_SUITE
