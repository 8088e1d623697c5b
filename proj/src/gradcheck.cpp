#include "irlab/gradcheck.hpp"

#include <cmath>
#include <stdexcept>

namespace irlab {

GradCheckReport finite_diff_check(MlpParams& params,
                                  const std::function<double()>& loss,
                                  const MlpParams& analytic,
                                  double step, std::size_t max_entries) {
  const std::size_t n = params.flat_size();
  if (analytic.flat_size() != n) {
    throw std::invalid_argument("finite_diff_check: gradient shape mismatch");
  }
  if (step <= 0.0) {
    throw std::invalid_argument("finite_diff_check: step must be positive");
  }

  std::size_t count = n;
  std::size_t stride = 1;
  if (max_entries > 0 && max_entries < n) {
    count = max_entries;
    stride = n / max_entries;
    if (stride == 0) stride = 1;
  }

  GradCheckReport report;
  MlpParams analytic_copy = analytic;
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t idx = (stride == 1) ? i : i * stride;
    if (idx >= n) break;
    double* x = params.flat_entry(idx);
    const double saved = *x;
    *x = saved + step;
    const double up = loss();
    *x = saved - step;
    const double down = loss();
    *x = saved;
    if (!std::isfinite(up) || !std::isfinite(down)) {
      throw std::runtime_error("finite_diff_check: loss returned non-finite value");
    }
    const double g_fd = (up - down) / (2.0 * step);
    const double g = *analytic_copy.flat_entry(idx);
    const double rel = std::abs(g - g_fd) / std::max(1e-8, std::abs(g_fd));
    const std::string block = params.block_name(idx);
    auto [it, inserted] = report.block_rel_error.try_emplace(block, rel);
    if (!inserted && rel > it->second) it->second = rel;
    if (rel > report.max_rel_error) {
      report.max_rel_error = rel;
      report.worst_block = block;
    }
    ++report.checked;
  }
  if (report.checked > 0 && report.worst_block.empty()) {
    report.worst_block = params.block_name(0);
  }
  return report;
}

}  // namespace irlab
