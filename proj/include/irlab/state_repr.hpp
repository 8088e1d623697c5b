#pragma once

#include <Eigen/Dense>

#include "irlab/objectworld.hpp"
#include "irlab/pendulum.hpp"

namespace irlab {

inline constexpr int kObjectworldReprDim = 6;
inline constexpr int kPendulumReprDim = 3;

/// Network input for a grid state: normalised coordinates followed by the
/// four object-distance features.
Eigen::VectorXd objectworld_state_repr(const Objectworld& world, int state);

/// Network input for a pendulum state: (cos, sin, thdot / max_speed).
Eigen::Vector3d pendulum_state_repr(const PendulumSpec& spec, const PendulumState& state);

}  // namespace irlab
