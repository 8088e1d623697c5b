#include "irlab/mdp.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace irlab {

namespace {

void check_row_stochastic(const Eigen::MatrixXd& m, const std::string& what) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    double sum = 0.0;
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      double p = m(r, c);
      if (!(p >= 0.0)) {
        throw std::invalid_argument(what + ": negative entry at row " +
                                    std::to_string(r));
      }
      sum += p;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
      throw std::invalid_argument(what + ": row " + std::to_string(r) +
                                  " sums to " + std::to_string(sum));
    }
  }
}

}  // namespace

void MdpModel::validate() const {
  if (num_states <= 0 || num_actions <= 0) {
    throw std::invalid_argument("MdpModel: state and action counts must be positive");
  }
  if (!(discount >= 0.0 && discount < 1.0)) {
    throw std::invalid_argument("MdpModel: discount must lie in [0, 1)");
  }
  if (static_cast<int>(transition.size()) != num_actions) {
    throw std::invalid_argument("MdpModel: one transition matrix per action required");
  }
  for (int a = 0; a < num_actions; ++a) {
    if (transition[a].rows() != num_states || transition[a].cols() != num_states) {
      throw std::invalid_argument("MdpModel: transition matrix shape mismatch");
    }
    check_row_stochastic(transition[a], "MdpModel transition, action " + std::to_string(a));
  }
}

RewardTable RewardTable::per_state(Eigen::VectorXd values) {
  RewardTable r;
  r.per_state_ = true;
  r.values_ = std::move(values);
  return r;
}

RewardTable RewardTable::per_transition(std::vector<Eigen::MatrixXd> tensor) {
  RewardTable r;
  r.per_state_ = false;
  r.tensor_ = std::move(tensor);
  return r;
}

const Eigen::VectorXd& RewardTable::state_values() const {
  if (!per_state_) {
    throw std::logic_error("RewardTable: transition-indexed table has no state vector");
  }
  return values_;
}

Eigen::MatrixXd RewardTable::expected_sa(const MdpModel& mdp) const {
  Eigen::MatrixXd er(mdp.num_states, mdp.num_actions);
  for (int a = 0; a < mdp.num_actions; ++a) {
    if (per_state_) {
      er.col(a) = mdp.transition[a] * values_;
    } else {
      er.col(a) = (mdp.transition[a].array() * tensor_[a].array()).rowwise().sum();
    }
  }
  return er;
}

void RewardTable::validate(const MdpModel& mdp) const {
  if (per_state_) {
    if (values_.size() != mdp.num_states) {
      throw std::invalid_argument("RewardTable: length does not match num_states");
    }
    if (!values_.allFinite()) {
      throw std::invalid_argument("RewardTable: non-finite entries");
    }
  } else {
    if (static_cast<int>(tensor_.size()) != mdp.num_actions) {
      throw std::invalid_argument("RewardTable: tensor action count mismatch");
    }
    for (const auto& m : tensor_) {
      if (m.rows() != mdp.num_states || m.cols() != mdp.num_states) {
        throw std::invalid_argument("RewardTable: tensor shape mismatch");
      }
      if (!m.allFinite()) {
        throw std::invalid_argument("RewardTable: non-finite entries");
      }
    }
  }
}

Policy Policy::from_actions(std::vector<int> actions, int num_actions) {
  Policy p;
  p.probs = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(actions.size()), num_actions);
  for (std::size_t s = 0; s < actions.size(); ++s) {
    if (actions[s] < 0 || actions[s] >= num_actions) {
      throw std::invalid_argument("Policy: action index out of range");
    }
    p.probs(static_cast<Eigen::Index>(s), actions[s]) = 1.0;
  }
  p.actions = std::move(actions);
  return p;
}

Policy Policy::from_probs(Eigen::MatrixXd probs) {
  check_row_stochastic(probs, "Policy");
  Policy p;
  p.probs = std::move(probs);
  return p;
}

void Policy::validate(const MdpModel& mdp) const {
  if (probs.rows() != mdp.num_states || probs.cols() != mdp.num_actions) {
    throw std::invalid_argument("Policy: shape does not match the MDP");
  }
  check_row_stochastic(probs, "Policy");
}

std::pair<ValueFunction, QFunction> value_iteration(const MdpModel& mdp,
                                                    const RewardTable& reward,
                                                    double tol,
                                                    const Eigen::VectorXd* v_init) {
  mdp.validate();
  reward.validate(mdp);
  if (!(tol > 0.0)) throw std::invalid_argument("value_iteration: tol must be positive");

  const Eigen::MatrixXd er = reward.expected_sa(mdp);
  Eigen::VectorXd v = (v_init != nullptr) ? *v_init
                                          : Eigen::VectorXd::Zero(mdp.num_states);
  Eigen::MatrixXd q(mdp.num_states, mdp.num_actions);

  for (int iter = 0; iter < kMaxBackups; ++iter) {
    for (int a = 0; a < mdp.num_actions; ++a) {
      q.col(a) = er.col(a) + mdp.discount * (mdp.transition[a] * v);
    }
    Eigen::VectorXd v_next = q.rowwise().maxCoeff();
    double diff = (v_next - v).cwiseAbs().maxCoeff();
    v = v_next;
    if (diff < tol) {
      // One more backup so that Q is exact for the returned V.
      for (int a = 0; a < mdp.num_actions; ++a) {
        q.col(a) = er.col(a) + mdp.discount * (mdp.transition[a] * v);
      }
      return {ValueFunction{q.rowwise().maxCoeff()}, QFunction{std::move(q)}};
    }
  }
  throw std::runtime_error("value_iteration: no convergence within " +
                           std::to_string(kMaxBackups) + " backups");
}

ValueFunction policy_evaluation(const MdpModel& mdp, const RewardTable& reward,
                                const Policy& policy, double tol) {
  mdp.validate();
  reward.validate(mdp);
  policy.validate(mdp);
  if (!(tol > 0.0)) throw std::invalid_argument("policy_evaluation: tol must be positive");

  const Eigen::MatrixXd er = reward.expected_sa(mdp);
  const Eigen::VectorXd r_pi = (er.array() * policy.probs.array()).rowwise().sum();
  // P_pi(s, s') = sum_a pi(a|s) P[s][a][s']
  Eigen::MatrixXd p_pi = Eigen::MatrixXd::Zero(mdp.num_states, mdp.num_states);
  for (int a = 0; a < mdp.num_actions; ++a) {
    p_pi += policy.probs.col(a).asDiagonal() * mdp.transition[a];
  }

  Eigen::VectorXd v = Eigen::VectorXd::Zero(mdp.num_states);
  for (int iter = 0; iter < kMaxBackups; ++iter) {
    Eigen::VectorXd v_next = r_pi + mdp.discount * (p_pi * v);
    double diff = (v_next - v).cwiseAbs().maxCoeff();
    v = std::move(v_next);
    if (diff < tol) return ValueFunction{std::move(v)};
  }
  throw std::runtime_error("policy_evaluation: no convergence within " +
                           std::to_string(kMaxBackups) + " backups");
}

Policy greedy_policy(const QFunction& q) {
  if (!q.q.allFinite()) throw std::invalid_argument("greedy_policy: non-finite Q");
  std::vector<int> actions(static_cast<std::size_t>(q.q.rows()));
  for (Eigen::Index s = 0; s < q.q.rows(); ++s) {
    int best = 0;
    for (Eigen::Index a = 1; a < q.q.cols(); ++a) {
      if (q.q(s, a) > q.q(s, best)) best = static_cast<int>(a);
    }
    actions[static_cast<std::size_t>(s)] = best;
  }
  return Policy::from_actions(std::move(actions), static_cast<int>(q.q.cols()));
}

Policy boltzmann_policy(const QFunction& q, double temperature) {
  if (!(temperature > 0.0)) {
    throw std::invalid_argument("boltzmann_policy: temperature must be positive");
  }
  Eigen::MatrixXd probs(q.q.rows(), q.q.cols());
  for (Eigen::Index s = 0; s < q.q.rows(); ++s) {
    Eigen::ArrayXd logits = q.q.row(s).array() / temperature;
    logits -= logits.maxCoeff();
    Eigen::ArrayXd ex = logits.exp();
    probs.row(s) = (ex / ex.sum()).matrix().transpose();
  }
  return Policy::from_probs(std::move(probs));
}

}  // namespace irlab
