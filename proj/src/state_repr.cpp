#include "irlab/state_repr.hpp"

namespace irlab {

Eigen::VectorXd objectworld_state_repr(const Objectworld& world, int state) {
  if (state < 0 || state >= world.num_states()) {
    throw std::invalid_argument("objectworld_state_repr: state out of range");
  }
  Eigen::VectorXd repr(kObjectworldReprDim);
  const double n = world.spec.grid_size;
  repr(0) = world.x_of(state) / n;
  repr(1) = world.y_of(state) / n;
  repr.tail<4>() = world.features.row(state).transpose();
  return repr;
}

Eigen::Vector3d pendulum_state_repr(const PendulumSpec& spec, const PendulumState& state) {
  return {state.cos_th, state.sin_th, state.thdot / spec.max_speed};
}

}  // namespace irlab
