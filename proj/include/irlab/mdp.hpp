#pragma once

#include <Eigen/Dense>
#include <vector>

namespace irlab {

/// Tabular MDP. Transition matrices are stored per action: transition[a](s, s')
/// is the probability of landing in s' after taking a in s. Every row of every
/// action matrix must sum to 1 within 1e-9 and the discount must lie in [0, 1).
struct MdpModel {
  int num_states = 0;
  int num_actions = 0;
  std::vector<Eigen::MatrixXd> transition;  // one (S x S) matrix per action
  double discount = 0.9;

  void validate() const;
};

/// Reward over states (canonical) or over (s, a, s') transitions. A transition
/// tensor is reduced to expected per-(s, a) form inside the Bellman backups.
/// State rewards follow the arrival convention: r(s, a, s') = r(s').
class RewardTable {
 public:
  static RewardTable per_state(Eigen::VectorXd values);
  /// tensor[a](s, s') = r(s, a, s')
  static RewardTable per_transition(std::vector<Eigen::MatrixXd> tensor);

  bool is_per_state() const { return per_state_; }
  const Eigen::VectorXd& state_values() const;
  /// Expected immediate reward matrix R(s, a) = sum_s' P[s][a][s'] r(s,a,s').
  Eigen::MatrixXd expected_sa(const MdpModel& mdp) const;
  void validate(const MdpModel& mdp) const;

 private:
  bool per_state_ = true;
  Eigen::VectorXd values_;
  std::vector<Eigen::MatrixXd> tensor_;
};

struct ValueFunction {
  Eigen::VectorXd v;
};

struct QFunction {
  Eigen::MatrixXd q;  // (S x A)
};

/// Stochastic policies store the full (S x A) row-stochastic matrix. A
/// deterministic policy additionally carries its action per state.
struct Policy {
  Eigen::MatrixXd probs;
  std::vector<int> actions;  // empty for stochastic policies

  bool deterministic() const { return !actions.empty(); }
  static Policy from_actions(std::vector<int> actions, int num_actions);
  static Policy from_probs(Eigen::MatrixXd probs);
  void validate(const MdpModel& mdp) const;
};

inline constexpr double kDefaultTol = 1e-6;
inline constexpr int kMaxBackups = 10000;

/// Bellman optimality fixed point via synchronous backups. Stops when the
/// successive-iterate max-norm difference falls below tol; throws after
/// kMaxBackups sweeps without convergence. The returned pair is consistent:
/// V(s) = max_a Q(s, a). `v_init` warm-starts the sweep when provided.
std::pair<ValueFunction, QFunction> value_iteration(
    const MdpModel& mdp, const RewardTable& reward, double tol = kDefaultTol,
    const Eigen::VectorXd* v_init = nullptr);

ValueFunction policy_evaluation(const MdpModel& mdp, const RewardTable& reward,
                                const Policy& policy, double tol = kDefaultTol);

/// Argmax per state; ties broken toward the lowest action index.
Policy greedy_policy(const QFunction& q);

/// pi(a|s) proportional to exp(Q(s,a) / temperature).
Policy boltzmann_policy(const QFunction& q, double temperature);

}  // namespace irlab
