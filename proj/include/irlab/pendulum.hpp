#pragma once

#include <Eigen/Dense>

#include "irlab/rng.hpp"

namespace irlab {

struct PendulumSpec {
  double dt = 0.05;
  double gravity = 10.0;
  double mass = 1.0;
  double length = 1.0;
  double max_torque = 2.0;
  double max_speed = 8.0;
  int action_count = 11;
  int episode_len = 1000;
  double w1 = 1.0;   // angle weight
  double w2 = 0.1;   // angular-velocity weight
  double w3 = 0.001; // torque weight

  void validate() const;
};

struct PendulumState {
  double cos_th = 1.0;
  double sin_th = 0.0;
  double thdot = 0.0;

  /// Angle recovered via atan2, in [-pi, pi]; 0 is upright.
  double theta() const;
  static PendulumState from_theta(double theta, double thdot);
  Eigen::Vector3d as_vector() const { return {cos_th, sin_th, thdot}; }
};

/// Torque for a discrete action: action_count values linearly spaced over
/// [-max_torque, +max_torque].
double pendulum_torque(const PendulumSpec& spec, int action_index);

/// Semi-implicit Euler step of the standard frictionless pendulum:
/// thddot = (3g / 2l) sin(theta) + (3 / m l^2) u.
PendulumState pendulum_step(const PendulumSpec& spec, const PendulumState& state,
                            int action_index);

/// R = -(w1 theta^2 + w2 thdot^2 + w3 u^2), always <= 0.
double pendulum_reward(const PendulumState& state, int action_index,
                       const PendulumSpec& spec);

/// Random start: theta ~ U(-pi, pi), thdot ~ U(-1, 1).
PendulumState pendulum_random_start(const PendulumSpec& spec, Rng& rng);

}  // namespace irlab
