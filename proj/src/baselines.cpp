#include "irlab/baselines.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "irlab/optim.hpp"

namespace irlab {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void require_discrete(const MdpModel& mdp, const Dataset& dataset, const char* op) {
  if (dataset.env != EnvTag::Objectworld) {
    throw std::invalid_argument(std::string(op) + ": needs a discrete-state dataset");
  }
  dataset.validate();
  for (const auto& traj : dataset.discrete) {
    for (const auto& step : traj) {
      if (step.state < 0 || step.state >= mdp.num_states ||
          step.next_state < 0 || step.next_state >= mdp.num_states ||
          step.action < 0 || step.action >= mdp.num_actions) {
        throw std::invalid_argument(std::string(op) + ": dataset indices exceed the model");
      }
    }
  }
}

int resolve_horizon(int horizon, const Dataset& dataset) {
  if (horizon > 0) return horizon;
  return static_cast<int>(dataset.discrete.front().size());
}

struct SoftPass {
  Eigen::VectorXd svf;
  double expected_log_partition = 0.0;
};

/// Time-indexed log-sum-exp backups (undiscounted, reward on the source
/// state), then a forward visitation sweep from p0. The expected log
/// partition is p0-weighted, so d(expected_log_partition)/dr = svf.
SoftPass soft_visitations(const MdpModel& mdp, const Eigen::VectorXd& r_state,
                          const Eigen::VectorXd& p0, int horizon) {
  const int num_states = mdp.num_states;
  const int num_actions = mdp.num_actions;

  std::vector<Eigen::MatrixXd> step_policies(static_cast<std::size_t>(horizon));
  Eigen::VectorXd v = Eigen::VectorXd::Zero(num_states);
  for (int t = horizon - 1; t >= 0; --t) {
    Eigen::MatrixXd q(num_states, num_actions);
    for (int a = 0; a < num_actions; ++a) {
      q.col(a) = r_state + mdp.transition[a] * v;
    }
    Eigen::VectorXd row_max = q.rowwise().maxCoeff();
    Eigen::VectorXd new_v =
        row_max.array() +
        (q.colwise() - row_max).array().exp().rowwise().sum().log();
    step_policies[static_cast<std::size_t>(t)] =
        (q.colwise() - new_v).array().exp();
    v = std::move(new_v);
  }

  SoftPass out;
  out.expected_log_partition = p0.dot(v);
  out.svf = Eigen::VectorXd::Zero(num_states);
  Eigen::VectorXd d = p0;
  for (int t = 0; t < horizon; ++t) {
    out.svf += d;
    if (t + 1 == horizon) break;
    const Eigen::MatrixXd& pi = step_policies[static_cast<std::size_t>(t)];
    Eigen::VectorXd d_next = Eigen::VectorXd::Zero(num_states);
    for (int a = 0; a < num_actions; ++a) {
      d_next += mdp.transition[a].transpose() * d.cwiseProduct(pi.col(a));
    }
    d = std::move(d_next);
  }
  return out;
}

}  // namespace

void MaxEntConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("MaxEntConfig: learning_rate must be positive");
  if (iterations < 0) throw std::invalid_argument("MaxEntConfig: iterations must be >= 0");
  if (!(l2 >= 0.0)) throw std::invalid_argument("MaxEntConfig: l2 must be >= 0");
}

void DeepMaxEntConfig::validate() const {
  if (!(learning_rate > 0.0)) throw std::invalid_argument("DeepMaxEntConfig: learning_rate must be positive");
  if (iterations < 0) throw std::invalid_argument("DeepMaxEntConfig: iterations must be >= 0");
}

void BirlConfig::validate() const {
  if (!(alpha >= 0.0)) throw std::invalid_argument("BirlConfig: alpha must be >= 0");
  if (!(step > 0.0)) throw std::invalid_argument("BirlConfig: step must be positive");
  if (iterations < 1) throw std::invalid_argument("BirlConfig: iterations must be >= 1");
  if (burn_in < 0 || burn_in >= iterations) {
    throw std::invalid_argument("BirlConfig: burn_in must lie in [0, iterations)");
  }
  if (!(r_max > 0.0)) throw std::invalid_argument("BirlConfig: r_max must be positive");
  if (!(sigma_prior > 0.0)) throw std::invalid_argument("BirlConfig: sigma_prior must be positive");
}

Eigen::VectorXd empirical_start_distribution(const MdpModel& mdp, const Dataset& dataset) {
  require_discrete(mdp, dataset, "empirical_start_distribution");
  Eigen::VectorXd p0 = Eigen::VectorXd::Zero(mdp.num_states);
  for (const auto& traj : dataset.discrete) p0(traj.front().state) += 1.0;
  return p0 / static_cast<double>(dataset.discrete.size());
}

Eigen::VectorXd empirical_svf(const MdpModel& mdp, const Dataset& dataset) {
  require_discrete(mdp, dataset, "empirical_svf");
  Eigen::VectorXd counts = Eigen::VectorXd::Zero(mdp.num_states);
  for (const auto& traj : dataset.discrete) {
    for (const auto& step : traj) counts(step.state) += 1.0;
  }
  return counts / static_cast<double>(dataset.discrete.size());
}

Eigen::VectorXd expected_svf(const MdpModel& mdp, const RewardTable& reward,
                             const Dataset& dataset, int horizon) {
  require_discrete(mdp, dataset, "expected_svf");
  if (horizon < 1) throw std::invalid_argument("expected_svf: horizon must be >= 1");
  if (!reward.is_per_state()) {
    throw std::invalid_argument("expected_svf: needs a per-state reward");
  }
  const Eigen::VectorXd p0 = empirical_start_distribution(mdp, dataset);
  return soft_visitations(mdp, reward.state_values(), p0, horizon).svf;
}

double maxent_objective(const MdpModel& mdp, const Eigen::VectorXd& state_reward,
                        const Dataset& dataset, int horizon) {
  require_discrete(mdp, dataset, "maxent_objective");
  if (horizon < 1) throw std::invalid_argument("maxent_objective: horizon must be >= 1");
  const Eigen::VectorXd emp = empirical_svf(mdp, dataset);
  const Eigen::VectorXd p0 = empirical_start_distribution(mdp, dataset);
  SoftPass pass = soft_visitations(mdp, state_reward, p0, horizon);
  return emp.dot(state_reward) - pass.expected_log_partition;
}

Eigen::VectorXd maxent_gradient(const Eigen::MatrixXd& features, const MdpModel& mdp,
                                const Dataset& dataset, const Eigen::VectorXd& weights,
                                int horizon) {
  if (features.rows() != mdp.num_states) {
    throw std::invalid_argument("maxent_gradient: one feature row per state required");
  }
  if (weights.size() != features.cols()) {
    throw std::invalid_argument("maxent_gradient: weight/feature dimension mismatch");
  }
  const Eigen::VectorXd emp = empirical_svf(mdp, dataset);
  const Eigen::VectorXd r = features * weights;
  const Eigen::VectorXd exp_svf =
      expected_svf(mdp, RewardTable::per_state(r), dataset, horizon);
  return features.transpose() * (emp - exp_svf);
}

RewardTable maxent_irl(const Eigen::MatrixXd& features, const MdpModel& mdp,
                       const Dataset& dataset, const MaxEntConfig& config) {
  config.validate();
  require_discrete(mdp, dataset, "maxent_irl");
  if (features.rows() != mdp.num_states) {
    throw std::invalid_argument("maxent_irl: one feature row per state required");
  }
  const int horizon = resolve_horizon(config.horizon, dataset);

  Eigen::VectorXd w = Eigen::VectorXd::Zero(features.cols());
  for (int it = 0; it < config.iterations; ++it) {
    const Eigen::VectorXd grad = maxent_gradient(features, mdp, dataset, w, horizon);
    w += config.learning_rate * (grad - config.l2 * w);
    if (!w.allFinite()) {
      throw std::runtime_error("maxent_irl: weights diverged at iteration " +
                               std::to_string(it));
    }
  }
  return RewardTable::per_state(features * w);
}

MlpParams deep_maxent_grads(const Mlp& net, const Eigen::MatrixXd& features,
                            const MdpModel& mdp, const Dataset& dataset, int horizon) {
  Mlp::Cache cache;
  Eigen::VectorXd r = net.forward(features, ForwardMode::Eval, nullptr, &cache)[0].col(0);
  if (!r.allFinite()) {
    throw std::runtime_error("deep_maxent_grads: non-finite reward output");
  }
  const Eigen::VectorXd exp_svf =
      expected_svf(mdp, RewardTable::per_state(r), dataset, horizon);
  const Eigen::MatrixXd head_grad = exp_svf - empirical_svf(mdp, dataset);
  return net.backward(cache, {head_grad});
}

RewardTable deep_maxent_irl(const Eigen::MatrixXd& features, const MdpModel& mdp,
                            const Dataset& dataset, const DeepMaxEntConfig& config,
                            Mlp& net) {
  config.validate();
  require_discrete(mdp, dataset, "deep_maxent_irl");
  if (features.rows() != mdp.num_states) {
    throw std::invalid_argument("deep_maxent_irl: one feature row per state required");
  }
  if (net.input_dim() != features.cols() || net.head_dims() != std::vector<int>{1}) {
    throw std::invalid_argument("deep_maxent_irl: network must map feature rows to a scalar");
  }
  const int horizon = resolve_horizon(config.horizon, dataset);

  AdamConfig adam_cfg;
  adam_cfg.learning_rate = config.learning_rate;
  AdamState adam = AdamState::init(net.params(), adam_cfg);

  for (int it = 0; it < config.iterations; ++it) {
    try {
      adam_step(net.params(), deep_maxent_grads(net, features, mdp, dataset, horizon), adam);
    } catch (const std::runtime_error& e) {
      throw std::runtime_error("deep_maxent_irl: iteration " + std::to_string(it) + ": " +
                               e.what());
    }
  }
  return RewardTable::per_state(net.forward(features, ForwardMode::Eval)[0].col(0));
}

RewardTable deep_maxent_irl(const Eigen::MatrixXd& features, const MdpModel& mdp,
                            const Dataset& dataset, const DeepMaxEntConfig& config) {
  std::vector<int> widths = {static_cast<int>(features.cols())};
  widths.insert(widths.end(), config.hidden.begin(), config.hidden.end());
  Mlp net(widths, {1}, Activation::ReLU, 0.0, sub_seed(config.seed, 0xdee9));
  return deep_maxent_irl(features, mdp, dataset, config, net);
}

namespace {

double birl_log_prior(const Eigen::VectorXd& r, const BirlConfig& config) {
  if (config.prior == BirlPrior::Uniform) {
    if ((r.array().abs() > config.r_max + 1e-12).any()) return kNegInf;
    return 0.0;
  }
  return -r.squaredNorm() / (2.0 * config.sigma_prior * config.sigma_prior);
}

double dataset_q_sum(const QFunction& qf, const Dataset& dataset) {
  double total = 0.0;
  for (const auto& traj : dataset.discrete) {
    for (const auto& step : traj) total += qf.q(step.state, step.action);
  }
  return total;
}

}  // namespace

double birl_log_posterior(const MdpModel& mdp, const RewardTable& reward,
                          const Dataset& dataset, const BirlConfig& config) {
  config.validate();
  require_discrete(mdp, dataset, "birl_log_posterior");
  if (!reward.is_per_state()) {
    throw std::invalid_argument("birl_log_posterior: needs a per-state reward");
  }
  double lp = birl_log_prior(reward.state_values(), config);
  if (lp == kNegInf || config.alpha == 0.0) return lp;
  auto [vf, qf] = value_iteration(mdp, reward);
  return lp + config.alpha * dataset_q_sum(qf, dataset);
}

RewardTable birl_policywalk(const MdpModel& mdp, const Dataset& dataset,
                            const BirlConfig& config, const PolicyWalkObserver* observer) {
  config.validate();
  require_discrete(mdp, dataset, "birl_policywalk");

  const int num_states = mdp.num_states;
  Rng rng(sub_seed(config.seed, 0xb1a1));

  Eigen::VectorXd r = Eigen::VectorXd::Zero(num_states);
  Eigen::VectorXd v = Eigen::VectorXd::Zero(num_states);
  double lp = birl_log_prior(r, config);
  if (config.alpha > 0.0) {
    auto [vf, qf] = value_iteration(mdp, RewardTable::per_state(r), kDefaultTol, &v);
    lp += config.alpha * dataset_q_sum(qf, dataset);
    v = vf.v;
  }

  Eigen::VectorXd mean_acc = Eigen::VectorXd::Zero(num_states);
  long mean_count = 0;
  bool accepted_any = false;

  for (int it = 0; it < config.iterations; ++it) {
    const int coord = rand_int(rng, 0, num_states - 1);
    const bool up = rand_int(rng, 0, 1) == 1;

    Eigen::VectorXd r_prop = r;
    r_prop(coord) += up ? config.step : -config.step;

    double lp_prop = birl_log_prior(r_prop, config);
    Eigen::VectorXd v_prop = v;
    bool accept = false;
    if (lp_prop != kNegInf) {
      if (config.alpha > 0.0) {
        auto [vf, qf] =
            value_iteration(mdp, RewardTable::per_state(r_prop), kDefaultTol, &v);
        lp_prop += config.alpha * dataset_q_sum(qf, dataset);
        v_prop = vf.v;
      }
      const double u = rand_uniform(rng);
      accept = std::log(u) < lp_prop - lp;
    }
    if (accept) {
      r = std::move(r_prop);
      v = std::move(v_prop);
      lp = lp_prop;
      accepted_any = true;
    }

    if (observer) (*observer)(it, r, lp, accept);

    if (it + 1 == config.burn_in && !accepted_any) {
      throw std::runtime_error(
          "birl_policywalk: no proposal accepted during burn-in; "
          "increase step or lower alpha");
    }
    if (it >= config.burn_in) {
      mean_acc += r;
      ++mean_count;
    }
  }

  return RewardTable::per_state(mean_acc / static_cast<double>(mean_count));
}

}  // namespace irlab
