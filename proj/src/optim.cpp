#include "irlab/optim.hpp"

#include <cmath>
#include <stdexcept>

namespace irlab {

AdamState AdamState::init(const MlpParams& params, const AdamConfig& config) {
  AdamState state;
  state.config = config;
  state.m = params.zeros_like();
  state.v = params.zeros_like();
  state.step = 0;
  return state;
}

namespace {

template <typename Block>
void adam_update_block(Block& p, const Block& g, Block& m, Block& v,
                       const AdamConfig& c, double bc1, double bc2) {
  m = c.beta1 * m + (1.0 - c.beta1) * g;
  v.array() = c.beta2 * v.array() + (1.0 - c.beta2) * g.array().square();
  auto m_hat = m.array() / bc1;
  auto v_hat = v.array() / bc2;
  p.array() -= c.learning_rate * m_hat / (v_hat.sqrt() + c.epsilon);
}

}  // namespace

void adam_step(MlpParams& params, const MlpParams& grads, AdamState& state) {
  if (!grads.all_finite()) {
    throw std::runtime_error("adam_step: non-finite gradient");
  }
  state.step += 1;
  const AdamConfig& c = state.config;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(state.step));

  for (std::size_t l = 0; l < params.w.size(); ++l) {
    adam_update_block(params.w[l], grads.w[l], state.m.w[l], state.v.w[l], c, bc1, bc2);
    adam_update_block(params.b[l], grads.b[l], state.m.b[l], state.v.b[l], c, bc1, bc2);
  }
  for (std::size_t k = 0; k < params.head_w.size(); ++k) {
    adam_update_block(params.head_w[k], grads.head_w[k], state.m.head_w[k],
                      state.v.head_w[k], c, bc1, bc2);
    adam_update_block(params.head_b[k], grads.head_b[k], state.m.head_b[k],
                      state.v.head_b[k], c, bc1, bc2);
  }
}

}  // namespace irlab
