#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "irlab/mdp.hpp"
#include "irlab/mlp.hpp"
#include "irlab/trajectory.hpp"

namespace irlab {

struct MaxEntConfig {
  double learning_rate = 0.1;
  int iterations = 200;
  int horizon = -1;  // -1 means the dataset's trajectory length
  double l2 = 0.001;

  void validate() const;
};

struct DeepMaxEntConfig {
  double learning_rate = 1e-3;
  int iterations = 200;
  int horizon = -1;
  std::vector<int> hidden = {32, 32};
  std::uint64_t seed = 0;

  void validate() const;
};

enum class BirlPrior { Uniform, Gaussian };

struct BirlConfig {
  double alpha = 1.0;  // demonstration-confidence weight on the Q term
  BirlPrior prior = BirlPrior::Uniform;
  double r_max = 1.0;       // half-width of the uniform prior box
  double sigma_prior = 1.0; // std of the gaussian prior
  double step = 0.05;       // proposal grid spacing
  int iterations = 50000;
  int burn_in = 10000;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Start-state frequencies observed in the dataset (sums to 1).
Eigen::VectorXd empirical_start_distribution(const MdpModel& mdp, const Dataset& dataset);

/// Source-state visitation counts averaged per trajectory; with uniform
/// trajectory length L the entries sum to L.
Eigen::VectorXd empirical_svf(const MdpModel& mdp, const Dataset& dataset);

/// Expected undiscounted state visitations of the finite-horizon soft-optimal
/// policy under `reward`, starting from the dataset's empirical start
/// distribution. Uses time-indexed log-sum-exp backups over `horizon` steps,
/// so the result is the exact gradient of the log partition function in
/// maxent_objective. Entries sum to horizon.
Eigen::VectorXd expected_svf(const MdpModel& mdp, const RewardTable& reward,
                             const Dataset& dataset, int horizon);

/// Average per-trajectory soft log-likelihood of the demonstrations under a
/// per-state reward: empirical_svf . r - log Z(r), with Z the finite-horizon
/// soft partition function from the empirical starts.
double maxent_objective(const MdpModel& mdp, const Eigen::VectorXd& state_reward,
                        const Dataset& dataset, int horizon);

/// d(maxent_objective)/dw for the linear reward F w: empirical feature
/// expectations minus F^T expected_svf.
Eigen::VectorXd maxent_gradient(const Eigen::MatrixXd& features, const MdpModel& mdp,
                                const Dataset& dataset, const Eigen::VectorXd& weights,
                                int horizon);

/// Gradient ascent on linear reward weights; returns features * weights.
RewardTable maxent_irl(const Eigen::MatrixXd& features, const MdpModel& mdp,
                       const Dataset& dataset, const MaxEntConfig& config);

/// Descent gradient of the negative demonstration log-likelihood with respect
/// to the network parameters at its current reward, i.e. backprop of
/// (expected - empirical) visitations through the per-state outputs. This is
/// exactly the direction deep_maxent_irl feeds the optimizer.
MlpParams deep_maxent_grads(const Mlp& net, const Eigen::MatrixXd& features,
                            const MdpModel& mdp, const Dataset& dataset, int horizon);

/// Reward = network(per-state features), trained by pushing the per-state
/// outputs along (empirical - expected) visitations with Adam. The overload
/// taking a network trains it in place (the network must map feature rows to
/// one scalar).
RewardTable deep_maxent_irl(const Eigen::MatrixXd& features, const MdpModel& mdp,
                            const Dataset& dataset, const DeepMaxEntConfig& config);
RewardTable deep_maxent_irl(const Eigen::MatrixXd& features, const MdpModel& mdp,
                            const Dataset& dataset, const DeepMaxEntConfig& config,
                            Mlp& net);

/// alpha * sum over dataset pairs of Q*(s, a; reward) plus the log prior
/// density (up to prior-family constants; -inf outside the uniform box).
/// alpha = 0 skips the value-iteration solve entirely.
double birl_log_posterior(const MdpModel& mdp, const RewardTable& reward,
                          const Dataset& dataset, const BirlConfig& config);

/// Observer invoked once per Metropolis step with (iteration, current reward,
/// current log posterior, proposal accepted).
using PolicyWalkObserver =
    std::function<void(int, const Eigen::VectorXd&, double, bool)>;

/// Random-walk Metropolis over per-state rewards on a step-size grid, one
/// coordinate perturbed per proposal, value iteration warm-started from the
/// previous solution. Returns the mean of the post-burn-in chain. Throws if
/// nothing was accepted by the end of burn-in.
RewardTable birl_policywalk(const MdpModel& mdp, const Dataset& dataset,
                            const BirlConfig& config,
                            const PolicyWalkObserver* observer = nullptr);

}  // namespace irlab
