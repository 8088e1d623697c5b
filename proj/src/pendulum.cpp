#include "irlab/pendulum.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace irlab {

void PendulumSpec::validate() const {
  if (action_count < 2) throw std::invalid_argument("PendulumSpec: action_count must be >= 2");
  if (!(max_torque > 0.0)) throw std::invalid_argument("PendulumSpec: max_torque must be positive");
  if (episode_len <= 0) throw std::invalid_argument("PendulumSpec: episode_len must be positive");
}

double PendulumState::theta() const { return std::atan2(sin_th, cos_th); }

PendulumState PendulumState::from_theta(double theta, double thdot) {
  return {std::cos(theta), std::sin(theta), thdot};
}

double pendulum_torque(const PendulumSpec& spec, int action_index) {
  if (action_index < 0 || action_index >= spec.action_count) {
    throw std::invalid_argument("pendulum: action index out of range");
  }
  double step = 2.0 * spec.max_torque / (spec.action_count - 1);
  return -spec.max_torque + step * action_index;
}

PendulumState pendulum_step(const PendulumSpec& spec, const PendulumState& state,
                            int action_index) {
  const double u = pendulum_torque(spec, action_index);
  const double th = state.theta();
  const double g = spec.gravity, m = spec.mass, l = spec.length;
  const double thddot = 3.0 * g / (2.0 * l) * std::sin(th) + 3.0 / (m * l * l) * u;
  double thdot = state.thdot + thddot * spec.dt;
  thdot = std::clamp(thdot, -spec.max_speed, spec.max_speed);
  return PendulumState::from_theta(th + thdot * spec.dt, thdot);
}

double pendulum_reward(const PendulumState& state, int action_index,
                       const PendulumSpec& spec) {
  const double u = pendulum_torque(spec, action_index);
  const double th = state.theta();
  return -(spec.w1 * th * th + spec.w2 * state.thdot * state.thdot + spec.w3 * u * u);
}

PendulumState pendulum_random_start(const PendulumSpec& spec, Rng& rng) {
  (void)spec;
  double theta = rand_uniform(rng, -M_PI, M_PI);
  double thdot = rand_uniform(rng, -1.0, 1.0);
  return PendulumState::from_theta(theta, thdot);
}

}  // namespace irlab
