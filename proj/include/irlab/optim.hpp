#pragma once

#include "irlab/mlp.hpp"

namespace irlab {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

/// First/second-moment accumulators mirroring the parameter shapes.
struct AdamState {
  AdamConfig config;
  MlpParams m;
  MlpParams v;
  long step = 0;

  static AdamState init(const MlpParams& params, const AdamConfig& config);
};

/// Standard bias-corrected Adam update, in place. Throws on non-finite
/// gradients.
void adam_step(MlpParams& params, const MlpParams& grads, AdamState& state);

}  // namespace irlab
