#pragma once

#include <functional>
#include <map>
#include <string>

#include "irlab/mlp.hpp"

namespace irlab {

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::string worst_block;
  std::size_t checked = 0;
  std::map<std::string, double> block_rel_error;
};

/// Central-difference check of analytic gradients against a scalar loss.
///
/// `loss` must re-evaluate the loss at the current parameter values and be
/// deterministic across calls (fix any sampling before invoking the check).
/// Relative error per entry is |g - g_fd| / max(1e-8, |g_fd|). When
/// `max_entries > 0` only that many evenly spaced entries are probed.
GradCheckReport finite_diff_check(MlpParams& params,
                                  const std::function<double()>& loss,
                                  const MlpParams& analytic,
                                  double step = 1e-5,
                                  std::size_t max_entries = 0);

}  // namespace irlab
